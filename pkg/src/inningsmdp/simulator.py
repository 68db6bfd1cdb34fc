"""Ball-by-ball innings and match simulation from empirical transition models.

Each ball: draw a wicket with the state's wicket probability (a wicket scores
nothing); otherwise, in optimal mode, play the policy action unless a draw
against the state's non-optimal rate says to fall back on the run
distribution; behavioural mode always samples the run distribution. Every
simulated ball is legal, so extra-flag states are never entered.

Simulations run in lockstep as numpy arrays, but each one consumes uniforms
from its own stream keyed by ``(seed, *labels, index)``, so a simulation's
outcome does not depend on how many others ran beside it.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .evaluation import make_interruption, percent_error
from .match_data import Corpus, DeliveryRecord, MatchRecord, build_match, is_eligible
from .policy import PolicyTable, TransitionModel
from .seeding import derive_rng
from .state_space import (
    ACTIONS,
    LEGAL_BALLS,
    FirstInningsState,
    InningsState,
    SecondInningsState,
    StateStep,
    score_band,
    shape_for,
)

BEHAVIORAL = "behavioral"
OPTIMAL = "optimal"
_ACTIONS = np.array(ACTIONS)


class SimulationConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Start:
    """Where a simulation begins; ``target`` is set only for a chase."""

    over: int = 0
    ball: int = 0
    wickets: int = 0
    score: int = 0
    target: int | None = None

    @classmethod
    def from_state(cls, state: InningsState, score: int, target: int | None = None) -> "Start":
        return cls(state.over, state.ball, state.wickets, score, target)

    @property
    def innings_no(self) -> int:
        return 1 if self.target is None else 2

    @property
    def balls_left(self) -> int:
        return LEGAL_BALLS - (6 * self.over + self.ball)


@dataclass(frozen=True)
class SimulationConfig:
    n_sims: int = 100
    seed: int = 0
    mode: str = BEHAVIORAL
    start: Start = field(default_factory=Start)

    def __post_init__(self):
        if self.n_sims <= 0:
            raise SimulationConfigError("n_sims must be positive")
        if self.mode not in (BEHAVIORAL, OPTIMAL):
            raise SimulationConfigError(f"mode must be {BEHAVIORAL!r} or {OPTIMAL!r}")
        if self.mode == OPTIMAL and self.start.target is not None:
            raise SimulationConfigError("optimal mode is defined for the first innings only")


@dataclass
class BatchResult:
    final_score: np.ndarray
    wickets: np.ndarray
    balls: np.ndarray
    # per-ball records, shape (balls, n); ``active`` marks balls actually bowled
    log: dict | None = None


def uniform_block(seed: int, labels: tuple, n: int, length: int) -> np.ndarray:
    """``(n, length, 3)`` uniforms; row ``i`` comes from stream ``(seed, *labels, i)``."""
    out = np.empty((n, max(length, 0), 3))
    for i in range(n):
        out[i] = derive_rng(seed, *labels, i).random((max(length, 0), 3))
    return out


def _simulate_batch(
    model: TransitionModel,
    policy: PolicyTable | None,
    start: Start,
    uniforms: np.ndarray,
    targets: np.ndarray | None = None,
    record: bool = False,
) -> BatchResult:
    n = uniforms.shape[0]
    innings_no = model.innings_no
    shape = shape_for(innings_no)
    if policy is not None and innings_no != 1:
        raise SimulationConfigError("optimal mode needs a first-innings model")
    if policy is not None and model.nonoptimal is None:
        raise SimulationConfigError("optimal mode needs non-optimal rates on the model")
    if targets is None and start.target is not None:
        targets = np.full(n, start.target)
    if innings_no == 2 and targets is None:
        raise SimulationConfigError("second-innings simulation needs a target")

    pos = np.full(n, 6 * start.over + start.ball)
    wickets = np.full(n, start.wickets)
    score = np.full(n, start.score)
    tband = np.minimum(targets // 10, 49) if targets is not None else None

    def alive_mask():
        ok = (pos < LEGAL_BALLS) & (wickets < 10)
        if targets is not None:
            ok &= score <= targets
        return ok

    alive = alive_mask()
    length = uniforms.shape[1]
    log = {k: np.zeros((length, n), dtype=np.int64) for k in ("over", "ball", "wickets", "score_before", "runs", "wicket", "active")} if record else None
    for step in range(length):
        if not alive.any():
            break
        act = np.flatnonzero(alive)
        over, ball = np.divmod(pos[act], 6)
        band = np.minimum(score[act] // 10, 49)
        zeros = np.zeros(act.size, dtype=np.int64)
        if innings_no == 1:
            comps = (over, wickets[act], band, ball, zeros)
        else:
            comps = (over, wickets[act], band, tband[act], ball, zeros)
        idx = np.ravel_multi_index(comps, shape)
        u = uniforms[act, step]

        is_wk = u[:, 0] < model.wicket_prob(idx)
        cdf = np.cumsum(model.run_dist(idx), axis=1)
        sampled = _ACTIONS[np.minimum((u[:, 2][:, None] >= cdf).sum(axis=1), len(ACTIONS) - 1)]
        if policy is not None:
            follow = u[:, 1] >= model.nonoptimal_prob(idx)
            runs = np.where(follow, policy(idx), sampled)
        else:
            runs = sampled
        runs = np.where(is_wk, 0, runs)

        if record:
            for key, val in (("over", over), ("ball", ball), ("wickets", wickets[act]), ("score_before", score[act]), ("runs", runs), ("wicket", is_wk)):
                log[key][step, act] = val
            log["active"][step, act] = 1
        score[act] += runs
        wickets[act] += is_wk
        pos[act] += 1
        alive = alive_mask()
    return BatchResult(score, wickets, pos - (6 * start.over + start.ball), log)


@dataclass
class SimulatedInnings:
    final_score: int
    wickets: int
    balls: int
    trajectory: list[StateStep]


def _trajectory_from_log(log: dict, i: int, innings_no: int, target: int | None) -> list[StateStep]:
    steps = []
    tb = score_band(target) if target is not None else None
    for t in np.flatnonzero(log["active"][:, i]):
        over, ball = int(log["over"][t, i]), int(log["ball"][t, i])
        wk, before = int(log["wickets"][t, i]), int(log["score_before"][t, i])
        band = score_band(before)
        state = (
            FirstInningsState(over, wk, band, ball, 0)
            if innings_no == 1
            else SecondInningsState(over, wk, band, tb, ball, 0)
        )
        runs = int(log["runs"][t, i])
        steps.append(StateStep(state, runs, bool(log["wicket"][t, i]), runs, before))
    return steps


def simulate_innings(
    model: TransitionModel,
    policy: PolicyTable | None,
    start: Start,
    rng: np.random.Generator,
) -> SimulatedInnings:
    """Play one innings to completion; ``policy`` switches on optimal mode."""
    uniforms = rng.random((1, start.balls_left, 3))
    res = _simulate_batch(model, policy, start, uniforms, record=True)
    traj = _trajectory_from_log(res.log, 0, model.innings_no, start.target)
    return SimulatedInnings(int(res.final_score[0]), int(res.wickets[0]), int(res.balls[0]), traj)


@dataclass(frozen=True)
class MatchOutcome:
    score_1: int
    score_2: int
    winner: str  # "team_1", "team_2" or "tie"


def _winner(s1: int, s2: int) -> str:
    if s1 > s2:
        return "team_1"
    if s2 > s1:
        return "team_2"
    return "tie"


def simulate_matches(
    model_1: TransitionModel,
    model_2: TransitionModel,
    policy: PolicyTable | None,
    seed: int,
    n_matches: int,
    *,
    record: bool = False,
) -> tuple[list[MatchOutcome], BatchResult, BatchResult]:
    """Simulate ``n_matches`` full matches; match ``i`` uses streams keyed by ``i``.

    The first innings follows ``policy`` when one is given; the chase is
    always behavioural, against the first-innings total.
    """
    u1 = uniform_block(seed, ("match", "innings", 1), n_matches, LEGAL_BALLS)
    first = _simulate_batch(model_1, policy, Start(), u1, record=record)
    targets = first.final_score.copy()
    u2 = uniform_block(seed, ("match", "innings", 2), n_matches, LEGAL_BALLS)
    second = _simulate_batch(model_2, None, Start(), u2, targets=targets, record=record)
    outcomes = [
        MatchOutcome(int(a), int(b), _winner(int(a), int(b))) for a, b in zip(first.final_score, second.final_score)
    ]
    return outcomes, first, second


def simulate_match(model_1: TransitionModel, model_2: TransitionModel, policy: PolicyTable | None, seed: int) -> MatchOutcome:
    outcomes, _, _ = simulate_matches(model_1, model_2, policy, seed, 1)
    return outcomes[0]


def win_rate(outcomes: Sequence[MatchOutcome]) -> float:
    """Team-1 win fraction with ties excluded."""
    decided = [o for o in outcomes if o.winner != "tie"]
    return sum(o.winner == "team_1" for o in decided) / len(decided) if decided else float("nan")


# --------------------------------------------------------------------------
# posterior distributions


@dataclass
class ScoreDistribution:
    histogram: dict[int, int]
    mode_flag: str = BEHAVIORAL

    @classmethod
    def from_scores(cls, scores, mode_flag: str = BEHAVIORAL) -> "ScoreDistribution":
        values, counts = np.unique(np.asarray(scores, dtype=np.int64), return_counts=True)
        return cls({int(v): int(c) for v, c in zip(values, counts)}, mode_flag)

    @property
    def n(self) -> int:
        return sum(self.histogram.values())

    def _arrays(self):
        v = np.array(list(self.histogram), dtype=float)
        c = np.array(list(self.histogram.values()), dtype=float)
        return v, c

    @property
    def mean(self) -> float:
        v, c = self._arrays()
        return float(np.dot(v, c) / c.sum())

    @property
    def std(self) -> float:
        v, c = self._arrays()
        return float(np.sqrt(np.dot(c, (v - self.mean) ** 2) / c.sum()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("final_score,count\n")
        for score in sorted(self.histogram):
            buf.write(f"{score},{self.histogram[score]}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {"mean": self.mean, "std": self.std, "n": self.n, "mode_flag": self.mode_flag}

    def to_dict(self) -> dict:
        return {"histogram": {str(k): v for k, v in sorted(self.histogram.items())}, **self.summary()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreDistribution":
        return cls({int(k): int(v) for k, v in d["histogram"].items()}, d.get("mode_flag", BEHAVIORAL))

    @classmethod
    def from_csv(cls, text: str, mode_flag: str = BEHAVIORAL) -> "ScoreDistribution":
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        return cls({int(a): int(b) for a, b in rows}, mode_flag)


def _posterior_scores(model, policy, start: Start, n_sims: int, seed: int, labels: tuple = ()) -> np.ndarray:
    u = uniform_block(seed, ("sim", *labels), n_sims, start.balls_left)
    return _simulate_batch(model, policy, start, u).final_score


def posterior_distribution(
    config: SimulationConfig,
    model: TransitionModel,
    policy: PolicyTable | None = None,
) -> ScoreDistribution:
    """Final-score distribution of ``config.n_sims`` simulations from ``config.start``."""
    if config.mode == OPTIMAL and policy is None:
        raise SimulationConfigError("optimal mode requires a policy")
    if (config.start.target is not None) != (model.innings_no == 2):
        raise SimulationConfigError("start target must be set exactly for second-innings models")
    use = policy if config.mode == OPTIMAL else None
    scores = _posterior_scores(model, use, config.start, config.n_sims, config.seed)
    return ScoreDistribution.from_scores(scores, config.mode)


# --------------------------------------------------------------------------
# accuracy against real outcomes


@dataclass
class SimulatorErrorReport:
    innings_no: int
    mode: str
    match_ids: list[str]
    errors: list[float]
    n_sims: int
    seed: int

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors)) if self.errors else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.errors)) if self.errors else float("nan")

    def to_dict(self) -> dict:
        return {
            "innings_no": self.innings_no,
            "mode": self.mode,
            "n_sims": self.n_sims,
            "seed": self.seed,
            "mean_error_pct": self.mean,
            "std_error_pct": self.std,
            "per_match": [{"match_id": m, "error_pct": e} for m, e in zip(self.match_ids, self.errors)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def simulator_error_report(
    corpus: Sequence[MatchRecord],
    models: dict[int, TransitionModel],
    policy: PolicyTable | None,
    config: SimulationConfig,
    innings: Sequence[int] = (1, 2),
) -> list[SimulatorErrorReport]:
    """Interrupt each eligible match, simulate to the end, compare the mean.

    One report per (innings, mode); the optimal mode is added for the first
    innings when a policy is supplied. Interruption draws follow the
    cross-validation protocol, keyed by the match's position in ``corpus``.
    """
    reports = []
    for k in innings:
        if k not in models:
            continue
        modes = [BEHAVIORAL] + ([OPTIMAL] if policy is not None and k == 1 else [])
        cuts = []
        for j, m in enumerate(corpus):
            if not is_eligible(m, k):
                continue
            cut = make_interruption(m, k, derive_rng(config.seed, "interrupt", k, j))
            if cut is not None and not cut.degenerate:
                cuts.append((j, m, cut))
        for mode in modes:
            ids, errors = [], []
            for j, m, cut in cuts:
                start = Start.from_state(cut.state, cut.score_at_interruption, m.final_score_1 if k == 2 else None)
                scores = _posterior_scores(
                    models[k], policy if mode == OPTIMAL else None, start, config.n_sims, config.seed, (k, j)
                )
                ids.append(m.match_id)
                errors.append(percent_error(float(np.mean(scores)), cut.actual_final_score))
            reports.append(SimulatorErrorReport(k, mode, ids, errors, config.n_sims, config.seed))
    return reports


# --------------------------------------------------------------------------
# synthetic corpora


def generate_corpus(
    model_1: TransitionModel,
    model_2: TransitionModel,
    n_matches: int,
    seed: int,
    policy: PolicyTable | None = None,
    prefix: str = "sim",
) -> Corpus:
    """Matches whose every ball was drawn from the given models."""
    _, first, second = simulate_matches(model_1, model_2, policy, seed, n_matches, record=True)
    matches = []
    for i in range(n_matches):
        innings = []
        for k, res in ((1, first), (2, second)):
            log = res.log
            rows = [
                DeliveryRecord(k, int(log["over"][t, i]), int(log["ball"][t, i]), int(log["runs"][t, i]), False, bool(log["wicket"][t, i]))
                for t in np.flatnonzero(log["active"][:, i])
            ]
            innings.append(rows)
        s1, s2 = int(first.final_score[i]), int(second.final_score[i])
        winner = {"team_1": "A", "team_2": "B", "tie": "tie"}[_winner(s1, s2)]
        matches.append(build_match(f"{prefix}-{i:05d}", "A", "B", winner, innings))
    return Corpus(tuple(matches), source=f"simulated:{prefix}:{seed}")
