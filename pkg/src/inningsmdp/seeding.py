"""Labelled random-stream derivation from one master seed.

Streams are keyed by ``(seed, *labels)`` through ``numpy.random.SeedSequence``
so that a fold or a simulation index gets the same stream no matter
how work is ordered or parallelised.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_word(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & 0xFFFFFFFFFFFFFFFF
    return zlib.crc32(str(label).encode("utf-8"))


def derive_seed_sequence(seed: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(_label_word, labels)])


def derive_rng(seed: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed_sequence(seed, *labels)))
