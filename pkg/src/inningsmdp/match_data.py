"""Ball-by-ball match records and the canonical on-disk corpus format.

A canonical match file is UTF-8 JSON holding one match::

    {"match_id": ..., "team_first": ..., "team_second": ..., "winner": ...,
     "innings": [{"deliveries": [{"over": 0, "ball_in_over": 0,
                                  "runs_batted": 1, "is_extra": false,
                                  "is_wicket": false}, ...]}, ...]}

``final_score`` / ``wickets_lost`` may be declared per innings; when present
they must agree with the deliveries. A corpus directory is a folder of such
files plus ``manifest.json`` listing the match ids.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

NO_RESULT = "no result"
TIE = "tie"

MAX_OVERS = 50
MAX_WICKETS = 10


class MatchParseError(ValueError):
    """Raised when a match document is not well-formed JSON or lacks fields."""


class MatchValidationError(ValueError):
    """Raised when a parsed match violates a record invariant.

    ``field`` names the offending field so callers can report it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class AdaptationError(ValueError):
    """Raised when a third-party document cannot be mapped to a MatchRecord."""


@dataclass(frozen=True)
class DeliveryRecord:
    innings_no: int
    over: int
    ball_in_over: int
    runs_batted: int
    is_extra: bool
    is_wicket: bool


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    team_first: str
    team_second: str
    winner: str
    deliveries: tuple[DeliveryRecord, ...]
    final_score_1: int
    final_score_2: int
    wickets_lost_1: int
    wickets_lost_2: int
    # Set when the result was decided by a revised-target method.
    decided_by_method: bool = False

    def innings(self, innings_no: int) -> list[DeliveryRecord]:
        return [d for d in self.deliveries if d.innings_no == innings_no]

    def final_score(self, innings_no: int) -> int:
        return self.final_score_1 if innings_no == 1 else self.final_score_2

    def wickets_lost(self, innings_no: int) -> int:
        return self.wickets_lost_1 if innings_no == 1 else self.wickets_lost_2

    @property
    def has_result(self) -> bool:
        return self.winner in (self.team_first, self.team_second)

    @property
    def batting_first_won(self) -> bool:
        return self.winner == self.team_first


@dataclass(frozen=True)
class Corpus:
    matches: tuple[MatchRecord, ...]
    source: str = ""
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        seen = {}
        for m in self.matches:
            if m.match_id in seen:
                raise MatchValidationError("match_id", f"duplicate match_id {m.match_id!r}")
            seen[m.match_id] = m
        self._index.update(seen)

    def __len__(self) -> int:
        return len(self.matches)

    def __iter__(self):
        return iter(self.matches)

    def __getitem__(self, match_id: str) -> MatchRecord:
        return self._index[match_id]

    @property
    def match_ids(self) -> list[str]:
        return [m.match_id for m in self.matches]

    def manifest_hash(self) -> str:
        """SHA-256 over the canonical serialization of every match, in order."""
        h = hashlib.sha256()
        for m in self.matches:
            h.update(dumps_match(m).encode("utf-8"))
        return h.hexdigest()

    def subset(self, match_ids: Iterable[str]) -> "Corpus":
        return Corpus(tuple(self._index[i] for i in match_ids), self.source)


# --------------------------------------------------------------------------
# construction / validation


def build_match(
    match_id: str,
    team_first: str,
    team_second: str,
    winner: str,
    innings: Sequence[Sequence[DeliveryRecord]],
    *,
    declared: Sequence[dict] | None = None,
    decided_by_method: bool = False,
) -> MatchRecord:
    """Assemble a MatchRecord from per-innings delivery lists and validate it.

    Totals are derived from the deliveries. ``declared`` optionally carries
    per-innings ``final_score`` / ``wickets_lost`` claims that must agree.
    """
    if len(innings) == 0 or all(len(inn) == 0 for inn in innings):
        raise MatchValidationError("deliveries", "no deliveries")
    if len(innings) > 2:
        raise MatchValidationError("innings", f"expected at most 2 innings, got {len(innings)}")
    deliveries: list[DeliveryRecord] = []
    scores = [0, 0]
    wickets = [0, 0]
    for k, inn in enumerate(innings):
        for d in inn:
            if d.innings_no != k + 1:
                raise MatchValidationError("innings_no", f"delivery in innings {k + 1} tagged {d.innings_no}")
            _check_delivery(d)
            scores[k] += d.runs_batted
            wickets[k] += int(d.is_wicket)
            deliveries.append(d)
        if declared is not None and k < len(declared):
            claim = declared[k]
            if "final_score" in claim and claim["final_score"] != scores[k]:
                raise MatchValidationError(
                    f"final_score_{k + 1}",
                    f"declared {claim['final_score']} but deliveries sum to {scores[k]}",
                )
            if "wickets_lost" in claim and claim["wickets_lost"] != wickets[k]:
                raise MatchValidationError(
                    f"wickets_lost_{k + 1}",
                    f"declared {claim['wickets_lost']} but deliveries record {wickets[k]}",
                )
    match = MatchRecord(
        match_id=str(match_id),
        team_first=team_first,
        team_second=team_second,
        winner=winner,
        deliveries=tuple(deliveries),
        final_score_1=scores[0],
        final_score_2=scores[1],
        wickets_lost_1=wickets[0],
        wickets_lost_2=wickets[1],
        decided_by_method=decided_by_method,
    )
    problems = match_violations(match)
    if problems:
        fld, msg = problems[0]
        raise MatchValidationError(fld, msg)
    return match


def _check_delivery(d: DeliveryRecord) -> None:
    if d.innings_no not in (1, 2):
        raise MatchValidationError("innings_no", f"must be 1 or 2, got {d.innings_no}")
    if not 0 <= d.over < MAX_OVERS:
        raise MatchValidationError("over", f"out of range 0..49: {d.over}")
    if not 0 <= d.ball_in_over <= 5:
        raise MatchValidationError("ball_in_over", f"out of range 0..5: {d.ball_in_over}")
    if not 0 <= d.runs_batted <= 6:
        raise MatchValidationError("runs_batted", f"out of range 0..6: {d.runs_batted}")


def match_violations(match: MatchRecord) -> list[tuple[str, str]]:
    """Return ``(field, message)`` pairs for every violated invariant."""
    out: list[tuple[str, str]] = []
    if not match.deliveries:
        out.append(("deliveries", "no deliveries"))
        return out
    for k in (1, 2):
        inn = match.innings(k)
        for d in inn:
            try:
                _check_delivery(d)
            except MatchValidationError as exc:
                out.append((exc.field, str(exc)))
                break
        runs = sum(d.runs_batted for d in inn)
        wk = sum(d.is_wicket for d in inn)
        if runs != match.final_score(k):
            out.append((f"final_score_{k}", f"stored {match.final_score(k)} but deliveries sum to {runs}"))
        if wk != match.wickets_lost(k):
            out.append((f"wickets_lost_{k}", f"stored {match.wickets_lost(k)} but deliveries record {wk}"))
        if wk > MAX_WICKETS or match.wickets_lost(k) > MAX_WICKETS:
            out.append((f"wickets_lost_{k}", "wickets_lost exceeds 10"))
        for prev, nxt in zip(inn, inn[1:]):
            if (nxt.over, nxt.ball_in_over) < (prev.over, prev.ball_in_over):
                out.append(("deliveries", "deliveries out of order"))
                break
        for prev, nxt in zip(inn, inn[1:]):
            if prev.is_extra and (nxt.over, nxt.ball_in_over) != (prev.over, prev.ball_in_over):
                out.append(("is_extra", "extra delivery advanced the ball position"))
                break
    innings_nos = [d.innings_no for d in match.deliveries]
    if innings_nos != sorted(innings_nos):
        out.append(("deliveries", "deliveries out of order"))
    return out


def is_eligible(match: MatchRecord, innings_no: int) -> bool:
    """Usable for training and evaluation: a result exists and the innings scored."""
    return match.winner != NO_RESULT and bool(match.innings(innings_no)) and match.final_score(innings_no) > 0


@dataclass(frozen=True)
class Violation:
    match_id: str
    field: str
    message: str


def validate_corpus(corpus: Corpus | Iterable[MatchRecord]) -> list[Violation]:
    """Report every invariant violation in a corpus; empty means clean."""
    reports = []
    seen = set()
    for m in corpus:
        if m.match_id in seen:
            reports.append(Violation(m.match_id, "match_id", "duplicate match_id"))
        seen.add(m.match_id)
        reports.extend(Violation(m.match_id, f, msg) for f, msg in match_violations(m))
    return reports


# --------------------------------------------------------------------------
# canonical format


def match_to_dict(match: MatchRecord) -> dict:
    innings = []
    for k in (1, 2):
        inn = match.innings(k)
        if not inn and k == 2:
            break
        innings.append(
            {
                "final_score": match.final_score(k),
                "wickets_lost": match.wickets_lost(k),
                "deliveries": [
                    {
                        "over": d.over,
                        "ball_in_over": d.ball_in_over,
                        "runs_batted": d.runs_batted,
                        "is_extra": d.is_extra,
                        "is_wicket": d.is_wicket,
                    }
                    for d in inn
                ],
            }
        )
    doc = {
        "match_id": match.match_id,
        "team_first": match.team_first,
        "team_second": match.team_second,
        "winner": match.winner,
        "innings": innings,
    }
    if match.decided_by_method:
        doc["decided_by_method"] = True
    return doc


def dumps_match(match: MatchRecord) -> str:
    return json.dumps(match_to_dict(match), indent=1, sort_keys=True)


def parse_match(data: bytes | str) -> MatchRecord:
    """Parse one canonical match document."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MatchParseError(f"not UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        line = data.splitlines()[exc.lineno - 1] if 0 < exc.lineno <= len(data.splitlines()) else ""
        raise MatchParseError(f"line {exc.lineno} col {exc.colno}: {exc.msg}: {line.strip()!r}") from exc
    if not isinstance(doc, dict):
        raise MatchParseError("top-level value must be an object")
    for key in ("match_id", "team_first", "team_second", "winner", "innings"):
        if key not in doc:
            raise MatchParseError(f"missing field {key!r}")
    innings = []
    declared = []
    for k, inn in enumerate(doc["innings"], start=1):
        if not isinstance(inn, dict) or "deliveries" not in inn:
            raise MatchParseError(f"innings {k}: missing 'deliveries'")
        rows = []
        for j, d in enumerate(inn["deliveries"]):
            try:
                rows.append(
                    DeliveryRecord(
                        innings_no=k,
                        over=_as_int(d["over"]),
                        ball_in_over=_as_int(d["ball_in_over"]),
                        runs_batted=_as_int(d["runs_batted"]),
                        is_extra=_as_bool(d["is_extra"]),
                        is_wicket=_as_bool(d["is_wicket"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise MatchParseError(f"innings {k} delivery {j}: bad or missing field {exc}") from exc
        innings.append(rows)
        declared.append({key: inn[key] for key in ("final_score", "wickets_lost") if key in inn})
    return build_match(
        doc["match_id"],
        doc["team_first"],
        doc["team_second"],
        doc["winner"],
        innings,
        declared=declared,
        decided_by_method=bool(doc.get("decided_by_method", False)),
    )


def _as_int(v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"expected integer, got {v!r}")
    return v


def _as_bool(v) -> bool:
    if not isinstance(v, bool):
        raise TypeError(f"expected boolean, got {v!r}")
    return v


# --------------------------------------------------------------------------
# Cricsheet adapter

_REBOWLED = ("wides", "noballs")


def adapt_cricsheet(document: dict | bytes | str, match_id: str | None = None) -> MatchRecord:
    """Map a Cricsheet JSON ball-by-ball export of a one-day match.

    Wides and no-balls become extras; byes and leg-byes are legal deliveries.
    Per-delivery runs are batter runs plus extras, clamped to 6.
    """
    if not isinstance(document, dict):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise AdaptationError(f"not valid JSON: {exc}") from exc
    info = document.get("info")
    if not isinstance(info, dict) or "innings" not in document:
        raise AdaptationError("missing 'info' or 'innings' section")
    match_type = str(info.get("match_type", "")).upper()
    if match_type not in ("ODI", "ODM"):
        raise AdaptationError(f"not a one-day match (match_type={info.get('match_type')!r})")
    raw_innings = document["innings"]
    if not raw_innings:
        raise AdaptationError("missing innings markers")
    if any(inn.get("super_over") for inn in raw_innings):
        raise AdaptationError("super-over content present")
    if len(raw_innings) > 2:
        raise AdaptationError(f"{len(raw_innings)} innings; only two are supported")
    teams = info.get("teams") or []
    if len(teams) != 2:
        raise AdaptationError("expected exactly two teams")
    batting = [inn.get("team") for inn in raw_innings]
    if batting[0] is None:
        raise AdaptationError("missing innings markers")
    team_first = batting[0]
    team_second = teams[1] if teams[0] == team_first else teams[0]

    outcome = info.get("outcome", {}) or {}
    if "winner" in outcome:
        winner = outcome["winner"]
    elif outcome.get("result") == "tie":
        winner = TIE
    else:
        winner = NO_RESULT
    decided_by_method = "method" in outcome

    innings = []
    for k, inn in enumerate(raw_innings, start=1):
        if "overs" not in inn:
            raise AdaptationError(f"innings {k}: missing 'overs'")
        rows = []
        for over_doc in inn["overs"]:
            over = int(over_doc["over"])
            if over >= MAX_OVERS:
                raise AdaptationError(f"innings {k}: over {over} beyond a one-day innings")
            legal = 0
            for d in over_doc["deliveries"]:
                extras = d.get("extras", {}) or {}
                is_extra = any(key in extras for key in _REBOWLED)
                runs = d["runs"]["batter"] + d["runs"].get("extras", 0)
                rows.append(
                    DeliveryRecord(
                        innings_no=k,
                        over=over,
                        # umpiring miscounts can yield a 7th legal ball
                        ball_in_over=min(legal, 5),
                        runs_batted=min(runs, 6),
                        is_extra=is_extra,
                        is_wicket=bool(d.get("wickets")),
                    )
                )
                if not is_extra:
                    legal += 1
        innings.append(rows)
    if match_id is None:
        match_id = str(info.get("match_id") or document.get("meta", {}).get("match_id") or _doc_hash(document))
    return build_match(
        match_id, team_first, team_second, winner, innings, decided_by_method=decided_by_method
    )


def _doc_hash(document: dict) -> str:
    return hashlib.sha1(json.dumps(document, sort_keys=True).encode()).hexdigest()[:12]


# --------------------------------------------------------------------------
# corpus directories


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_corpus(corpus: Corpus, directory: str | os.PathLike) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for m in corpus:
        _atomic_write(directory / f"{_safe_name(m.match_id)}.json", dumps_match(m))
    manifest = {
        "match_ids": corpus.match_ids,
        "source": corpus.source,
        "sha256": corpus.manifest_hash(),
    }
    _atomic_write(directory / "manifest.json", json.dumps(manifest, indent=1))
    return directory


def _safe_name(match_id: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in match_id)


def read_corpus(directory: str | os.PathLike, *, exclude_method_decided: bool = False) -> Corpus:
    """Load a canonical corpus directory in manifest order."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    matches = []
    for mid in manifest["match_ids"]:
        m = parse_match((directory / f"{_safe_name(mid)}.json").read_bytes())
        if exclude_method_decided and m.decided_by_method:
            continue
        matches.append(m)
    return Corpus(tuple(matches), str(directory))


def ingest_cricsheet(
    paths: Iterable[str | os.PathLike],
    *,
    exclude_method_decided: bool = False,
    threads: int = 1,
) -> tuple[Corpus, list[tuple[str, str]]]:
    """Adapt a batch of Cricsheet files; returns the corpus and skipped files.

    Files that fail adaptation are reported as ``(path, reason)`` rather than
    aborting the batch. Output order follows the sorted input paths.
    """
    from concurrent.futures import ThreadPoolExecutor

    paths = sorted(str(p) for p in paths)

    def load(p):
        try:
            return adapt_cricsheet(Path(p).read_bytes(), match_id=Path(p).stem), None
        except (AdaptationError, MatchValidationError, KeyError, TypeError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(load, paths))
    matches, skipped = [], []
    for p, (m, err) in zip(paths, results):
        if m is None:
            skipped.append((p, err))
        elif exclude_method_decided and m.decided_by_method:
            skipped.append((p, "decided by revised-target method"))
        else:
            matches.append(m)
    source = os.path.commonpath(paths) if paths else ""
    return Corpus(tuple(matches), source), skipped
