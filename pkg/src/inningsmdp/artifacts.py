"""Versioned JSON envelopes for every artifact the pipeline writes.

Each file is ``{"kind", "schema_version", "provenance", "payload"}``. Writes go
to a temporary sibling first and are renamed into place, so a crash never
leaves a half-written artifact behind.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from . import __version__
from .irl import IrlResult
from .policy import PolicyTable, TransitionModel
from .simulator import ScoreDistribution
from .value_model import network_from_dict, network_to_dict

SCHEMA_VERSION = 1
KINDS = ("model", "coefficients", "transitions", "policy", "distribution", "report")


class ArtifactKindError(ValueError):
    pass


class SchemaVersionError(ValueError):
    pass


_ENCODE = {
    "model": network_to_dict,
    "coefficients": IrlResult.to_dict,
    "transitions": TransitionModel.to_dict,
    "policy": PolicyTable.to_dict,
    "distribution": ScoreDistribution.to_dict,
    "report": lambda d: d if isinstance(d, dict) else d.to_dict(),
}

_DECODE = {
    "model": network_from_dict,
    "coefficients": IrlResult.from_dict,
    "transitions": TransitionModel.from_dict,
    "policy": PolicyTable.from_dict,
    "distribution": ScoreDistribution.from_dict,
    "report": lambda d: d,
}


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp-{os.getpid()}")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
    return path


def dumps_artifact(kind: str, obj, provenance: dict | None = None) -> str:
    if kind not in KINDS:
        raise ArtifactKindError(f"unknown artifact kind {kind!r}")
    envelope = {
        "kind": kind,
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "provenance": provenance or {},
        "payload": _ENCODE[kind](obj),
    }
    return json.dumps(envelope, sort_keys=True)


def save_artifact(kind: str, obj, path: str | os.PathLike, provenance: dict | None = None) -> Path:
    return atomic_write_text(path, dumps_artifact(kind, obj, provenance))


def loads_artifact(kind: str, text: str, *, with_provenance: bool = False):
    envelope = json.loads(text)
    found = envelope.get("kind")
    if found != kind:
        raise ArtifactKindError(f"expected a {kind!r} artifact, found {found!r}")
    version = envelope.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"schema version {version!r} is not supported (expected {SCHEMA_VERSION})")
    obj = _DECODE[kind](envelope["payload"])
    return (obj, envelope.get("provenance", {})) if with_provenance else obj


def load_artifact(kind: str, path: str | os.PathLike, *, with_provenance: bool = False):
    return loads_artifact(kind, Path(path).read_text(encoding="utf-8"), with_provenance=with_provenance)

