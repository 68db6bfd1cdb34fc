"""Discrete innings states with their integer encodings and trajectories.

First-innings states have shape ``(51, 11, 50, 6, 2)`` over
``(over, wickets, score_band, ball, extra_flag)``. Second-innings states add a
target band after the score band: ``(51, 11, 50, 50, 6, 2)``. Encodings are
row-major over those shapes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .match_data import MatchRecord

FIRST_SHAPE = (51, 11, 50, 6, 2)
SECOND_SHAPE = (51, 11, 50, 50, 6, 2)
N_FIRST = int(np.prod(FIRST_SHAPE))  # 336_600
N_SECOND = int(np.prod(SECOND_SHAPE))  # 16_830_000

ACTIONS = (0, 1, 2, 3, 4, 6)
LEGAL_BALLS = 300


class StateEncodingError(ValueError):
    pass


class TrajectoryError(ValueError):
    pass


class FirstInningsState(NamedTuple):
    over: int
    wickets: int
    score_band: int
    ball: int
    extra_flag: int

    @property
    def is_terminal(self) -> bool:
        return self.over >= 50 or self.wickets >= 10


class SecondInningsState(NamedTuple):
    over: int
    wickets: int
    score_band: int
    target_band: int
    ball: int
    extra_flag: int

    @property
    def is_terminal(self) -> bool:
        return self.over >= 50 or self.wickets >= 10


InningsState = Union[FirstInningsState, SecondInningsState]


def shape_for(innings_no: int) -> tuple[int, ...]:
    if innings_no == 1:
        return FIRST_SHAPE
    if innings_no == 2:
        return SECOND_SHAPE
    raise ValueError(f"innings_no must be 1 or 2, got {innings_no}")


def score_band(score: int) -> int:
    if score < 0:
        raise ValueError(f"score must be non-negative, got {score}")
    return min(score // 10, 49)


def encode_state(state: InningsState) -> int:
    if len(state) not in (5, 6):
        raise StateEncodingError(f"state must have 5 or 6 components, got {len(state)}")
    cls = FirstInningsState if len(state) == 5 else SecondInningsState
    shape = FIRST_SHAPE if len(state) == 5 else SECOND_SHAPE
    index = 0
    for value, size, name in zip(state, shape, cls._fields):
        if not 0 <= value < size:
            raise StateEncodingError(f"{name}={value} outside 0..{size - 1}")
        index = index * size + int(value)
    return index


def decode_state(index: int, innings_no: int = 1) -> InningsState:
    shape = shape_for(innings_no)
    if not 0 <= index < int(np.prod(shape)):
        raise StateEncodingError(f"index {index} outside the innings-{innings_no} state space")
    parts = np.unravel_index(index, shape)
    cls = FirstInningsState if innings_no == 1 else SecondInningsState
    return cls(*(int(p) for p in parts))


def encode_many(components: np.ndarray, innings_no: int = 1) -> np.ndarray:
    """Vectorised encoding of an ``(n, 5)`` or ``(n, 6)`` integer array."""
    components = np.asarray(components, dtype=np.int64)
    return np.ravel_multi_index(tuple(components.T), shape_for(innings_no)).astype(np.int64)


def decode_many(indices: np.ndarray, innings_no: int = 1) -> np.ndarray:
    return np.stack(np.unravel_index(np.asarray(indices, dtype=np.int64), shape_for(innings_no)), axis=1)


def action_for_runs(runs: int) -> int:
    """Map observed runs to the modeled action set; five becomes four."""
    if runs == 5:
        return 4
    if runs not in ACTIONS:
        raise ValueError(f"runs {runs} outside 0..6")
    return runs


@dataclass(frozen=True)
class StateStep:
    state: InningsState
    action: int
    wicket: bool
    runs: int
    score_before: int


def build_trajectory(match: MatchRecord, innings_no: int) -> list[StateStep]:
    """One step per delivery, each holding the state the ball was bowled in.

    The extra flag is set on the state following an extra and stays set
    through consecutive extras. Score band and wickets update with every
    delivery, extras included. A chase stops at the winning run.
    """
    deliveries = match.innings(innings_no)
    if not deliveries:
        raise TrajectoryError(f"match {match.match_id}: innings {innings_no} has no deliveries")
    if match.final_score(innings_no) == 0:
        raise TrajectoryError(f"match {match.match_id}: zero-score innings")
    target = match.final_score_1 if innings_no == 2 else None
    target_band = score_band(target) if target is not None else None

    steps = []
    score = wickets = 0
    prev = None
    for d in deliveries:
        flag = int(
            prev is not None and prev.is_extra and (d.over, d.ball_in_over) == (prev.over, prev.ball_in_over)
        )
        band = score_band(score)
        if innings_no == 1:
            state = FirstInningsState(d.over, wickets, band, d.ball_in_over, flag)
        else:
            state = SecondInningsState(d.over, wickets, band, target_band, d.ball_in_over, flag)
        steps.append(StateStep(state, action_for_runs(d.runs_batted), d.is_wicket, d.runs_batted, score))
        score += d.runs_batted
        wickets += int(d.is_wicket)
        prev = d
        if target is not None and score > target:
            break
    return steps


def trajectory_score(trajectory: Sequence[StateStep]) -> int:
    return sum(s.runs for s in trajectory)


@dataclass(frozen=True)
class McSample:
    features: np.ndarray
    target: float


def mc_targets(trajectory: Sequence[StateStep], final_score: int) -> list[McSample]:
    """Remaining-runs fraction from each visited state.

    The per-ball reward is ``runs / final_score``, so the undiscounted return
    from a state is the share of the final total still to come.
    """
    from .value_model import normalize_features

    if final_score <= 0:
        raise TrajectoryError("final score must be positive; the remaining-runs fraction is undefined")
    if not trajectory:
        raise TrajectoryError("empty trajectory")
    out = []
    for step in trajectory:
        target = (final_score - step.score_before) / final_score
        out.append(McSample(normalize_features(step.state), target))
    return out


def per_ball_rewards(trajectory: Sequence[StateStep], final_score: int) -> np.ndarray:
    return np.array([s.runs / final_score for s in trajectory])


def trajectory_arrays(trajectory: Sequence[StateStep], innings_no: int) -> dict[str, np.ndarray]:
    """Columnar view of a trajectory used by the vectorised estimators."""
    n_comp = 5 if innings_no == 1 else 6
    comps = np.array([s.state for s in trajectory], dtype=np.int64).reshape(-1, n_comp)
    return {
        "components": comps,
        "index": encode_many(comps, innings_no),
        "action": np.array([s.action for s in trajectory], dtype=np.int64),
        "wicket": np.array([s.wicket for s in trajectory], dtype=bool),
        "runs": np.array([s.runs for s in trajectory], dtype=np.int64),
        "score_before": np.array([s.score_before for s in trajectory], dtype=np.int64),
    }


def dumps_trajectory(trajectory: Sequence[StateStep]) -> str:
    """JSON lines with one step per line, for debugging."""
    lines = []
    for s in trajectory:
        lines.append(
            json.dumps(
                {
                    "state": dict(s.state._asdict()),
                    "action": s.action,
                    "wicket": s.wicket,
                    "runs": s.runs,
                }
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")
