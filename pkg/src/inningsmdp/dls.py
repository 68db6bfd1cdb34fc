"""Duckworth-Lewis-Stern resource table used as the comparison baseline.

Tables are CSV files with header ``overs_remaining,w0,...,w9`` and 50 data
rows (overs remaining 50 down to 1), each value the fraction of scoring
resources left.

The bundled ``dls_standard_approx.csv`` is *not* the published table. It is
generated from the two-parameter exponential resource model calibrated to the
standard edition's 50-over row and 0-wicket column, so it tracks the shape of
the real table to within a few hundredths. Load the published table with
:func:`load_dls_table` when you have it.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from importlib import resources

import numpy as np

N_OVERS = 50
N_WICKETS = 10


class DlsFormatError(ValueError):
    pass


class DlsLookupError(IndexError):
    pass


class DlsMonotonicityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DlsTable:
    # resources[u - 1, w] for u overs remaining and w wickets lost
    resources: np.ndarray

    @property
    def size(self) -> int:
        return self.resources.size

    def monotonicity_problems(self) -> list[str]:
        problems = []
        r = self.resources
        if np.any(np.diff(r, axis=1) > 0):
            problems.append("resources increase with wickets lost")
        if np.any(np.diff(r, axis=0) < 0):
            problems.append("resources decrease with overs remaining")
        return problems

    def lookup(self, overs_remaining, wickets_lost):
        return dls_resources_left(self, overs_remaining, wickets_lost)


def load_dls_table(data: bytes | str) -> DlsTable:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    rows = list(csv.reader(io.StringIO(data)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DlsFormatError("empty table")
    header = [c.strip() for c in rows[0]]
    expected = ["overs_remaining"] + [f"w{w}" for w in range(N_WICKETS)]
    if header != expected:
        raise DlsFormatError(f"header must be {','.join(expected)}; got {','.join(header)}")
    body = rows[1:]
    if len(body) != N_OVERS:
        raise DlsFormatError(f"expected {N_OVERS} data rows, got {len(body)}")
    table = np.full((N_OVERS, N_WICKETS), np.nan)
    for line_no, row in enumerate(body, start=2):
        if len(row) != N_WICKETS + 1:
            raise DlsFormatError(f"line {line_no}: expected {N_WICKETS + 1} columns, got {len(row)}")
        try:
            u = int(row[0])
            values = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise DlsFormatError(f"line {line_no}: {exc}") from exc
        if not 1 <= u <= N_OVERS:
            raise DlsFormatError(f"line {line_no}: overs_remaining {u} outside 1..50")
        if not all(0.0 <= v <= 1.0 for v in values):
            raise DlsFormatError(f"line {line_no}: values must be ratios in [0, 1]")
        table[u - 1] = values
    if np.isnan(table).any():
        raise DlsFormatError("overs_remaining rows are not exactly 1..50")
    out = DlsTable(table)
    for problem in out.monotonicity_problems():
        warnings.warn(f"DLS table: {problem}", DlsMonotonicityWarning, stacklevel=2)
    return out


def bundled_table() -> DlsTable:
    """The shipped exponential-model approximation of the standard edition."""
    data = resources.files("inningsmdp").joinpath("data/dls_standard_approx.csv").read_bytes()
    return load_dls_table(data)


def dls_resources_left(table: DlsTable, overs_remaining: int, wickets_lost: int) -> float:
    if not 0 <= wickets_lost < N_WICKETS:
        raise DlsLookupError(f"wickets_lost {wickets_lost} outside 0..9")
    if overs_remaining == 0:
        return 0.0
    if not 1 <= overs_remaining <= N_OVERS:
        raise DlsLookupError(f"overs_remaining {overs_remaining} outside 0..50")
    return float(table.resources[overs_remaining - 1, wickets_lost])


def to_csv(table: DlsTable) -> str:
    lines = ["overs_remaining," + ",".join(f"w{w}" for w in range(N_WICKETS))]
    for u in range(N_OVERS, 0, -1):
        lines.append(f"{u}," + ",".join(repr(float(v)) for v in table.resources[u - 1]))
    return "\n".join(lines) + "\n"
