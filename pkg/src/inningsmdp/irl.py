"""Linear reward recovery from winning-side first innings.

The reward of taking action ``a`` in state ``s`` is

    x . s                      for a dot ball,
    x . s + y_a * 1000 * a     otherwise,

with ten coefficients boxed in [-1, 1]. Feature totals are undiscounted
per-trajectory sums of those ten features. Each losing-side trajectory adds
one condition ``d_i = mean(expert totals) - totals_i`` to a pool, and the
coefficients maximise ``sum_i p(c . d_i)`` with ``p(v) = min(v, 2v)``, which
rewards separation and charges violations double.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .match_data import Corpus, MatchRecord
from .state_space import ACTIONS, StateStep, TrajectoryError, build_trajectory

log = logging.getLogger(__name__)

STATE_FEATURES = ("over", "wickets", "score_band", "ball", "extra_flag")
ACTION_FEATURES = (1, 2, 3, 4, 6)
FEATURE_NAMES = ("x1", "x2", "x3", "x4", "x5", "y1", "y2", "y3", "y4", "y6")
N_FEATURES = 10
ACTION_SCALE = 1000


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class RewardCoefficients:
    x: tuple[float, ...]
    y: dict

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", {int(k): float(v) for k, v in self.y.items()})
        if len(self.x) != 5 or sorted(self.y) != list(ACTION_FEATURES):
            raise ValueError("need five state weights and action weights for 1, 2, 3, 4, 6")
        if any(abs(v) > 1 + 1e-9 for v in self.vector):
            raise ValueError("coefficients must lie in [-1, 1]")

    @classmethod
    def from_vector(cls, c: Sequence[float]) -> "RewardCoefficients":
        c = [float(v) for v in c]
        return cls(tuple(c[:5]), dict(zip(ACTION_FEATURES, c[5:])))

    @classmethod
    def ones(cls) -> "RewardCoefficients":
        return cls.from_vector(np.ones(N_FEATURES))

    @property
    def vector(self) -> np.ndarray:
        return np.array([*self.x, *(self.y[a] for a in ACTION_FEATURES)])

    def action_weights(self) -> np.ndarray:
        """Weight per modeled action in ``ACTIONS`` order; zero for the dot ball."""
        return np.array([0.0] + [self.y[a] for a in ACTION_FEATURES])


def reward(state, action: int, coeffs: RewardCoefficients) -> float:
    if action not in ACTIONS:
        raise ValueError(f"action {action} is not one of {ACTIONS}")
    value = float(np.dot(coeffs.x, np.asarray(state[:5], dtype=float)))
    if action != 0:
        value += coeffs.y[action] * ACTION_SCALE * action
    return value


def feature_totals(trajectory: Iterable[StateStep]) -> np.ndarray:
    """Ten undiscounted feature sums in ``FEATURE_NAMES`` order."""
    totals = np.zeros(N_FEATURES)
    for step in trajectory:
        totals[:5] += step.state[:5]
        if step.action != 0:
            totals[5 + ACTION_FEATURES.index(step.action)] += ACTION_SCALE * step.action
    return totals


def partition_expert(corpus: Corpus | Sequence[MatchRecord]):
    """Split first-innings trajectories by whether the batting side won.

    Returns ``(expert, non_expert, excluded_ids)``; ties, no-results and
    scoreless first innings are excluded.
    """
    expert, non_expert, excluded = [], [], []
    for m in corpus:
        if not m.has_result:
            excluded.append(m.match_id)
            continue
        try:
            traj = build_trajectory(m, 1)
        except TrajectoryError:
            excluded.append(m.match_id)
            continue
        (expert if m.batting_first_won else non_expert).append(traj)
    return expert, non_expert, excluded


def penalty(v):
    return np.minimum(v, 2 * v)


def lp_objective(c: Sequence[float], conditions: np.ndarray) -> float:
    d = np.atleast_2d(np.asarray(conditions, dtype=float))
    return float(np.sum(penalty(d @ np.asarray(c, dtype=float))))


def _lp_matrices(d: np.ndarray):
    # variables: c (n), t (k); rows: t_i - d_i.c <= 0 and t_i - 2 d_i.c <= 0
    k, n = d.shape
    eye = np.eye(k)
    a_ub = np.vstack([np.hstack([-d, eye]), np.hstack([-2 * d, eye])])
    b_ub = np.zeros(2 * k)
    bounds = [(-1.0, 1.0)] * n + [(None, None)] * k
    return a_ub, b_ub, bounds


def _solve(cost, a_ub, b_ub, bounds) -> np.ndarray:
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status == 2:
        raise LpError("LP reported infeasible; box constraints alone cannot be")
    if res.status == 3:
        raise LpError("LP reported unbounded; internal error")
    if res.status != 0:
        raise LpError(f"LP solver failed: {res.message}")
    return res.x


def lp_optimum(conditions: np.ndarray) -> float:
    """Optimal objective only, without vertex tie-breaking."""
    d = np.atleast_2d(np.asarray(conditions, dtype=float))
    scale = float(np.max(np.abs(d))) if d.size else 0.0
    if scale == 0.0:
        return 0.0
    ds = d / scale
    a_ub, b_ub, bounds = _lp_matrices(ds)
    k, n = ds.shape
    z = _solve(np.concatenate([np.zeros(n), -np.ones(k)]), a_ub, b_ub, bounds)
    return lp_objective(np.clip(z[:n], -1, 1), ds) * scale


def solve_lp(conditions: np.ndarray, *, tol: float = 1e-9) -> RewardCoefficients:
    """Maximise ``sum_i p(c . d_i)`` over the box, returning the
    lexicographically smallest optimal vertex.

    Conditions are rescaled by their largest magnitude before solving, which
    leaves the argmax set unchanged.
    """
    d = np.atleast_2d(np.asarray(conditions, dtype=float))
    if d.shape[0] == 0:
        raise ValueError("empty condition pool")
    k, n = d.shape
    scale = float(np.max(np.abs(d)))
    if scale == 0.0:
        return RewardCoefficients.from_vector(-np.ones(n))
    ds = d / scale
    a_ub, b_ub, bounds = _lp_matrices(ds)
    obj = np.concatenate([np.zeros(n), -np.ones(k)])
    z = _solve(obj, a_ub, b_ub, bounds)
    best = -float(obj @ z)

    # hold the objective at its optimum, then minimise c_0, c_1, ... in turn
    slack = tol * max(1.0, abs(best))
    a_lex = np.vstack([a_ub, obj])
    b_lex = np.concatenate([b_ub, [-(best - slack)]])
    bounds = list(bounds)
    for j in range(n):
        cost = np.zeros(n + k)
        cost[j] = 1.0
        for widen in (1, 10, 100):
            b_lex[-1] = -(best - slack * widen)
            try:
                z = _solve(cost, a_lex, b_lex, bounds)
                break
            except LpError:
                continue
        else:
            raise LpError(f"lexicographic step {j} failed")
        v = float(np.clip(z[j], -1.0, 1.0))
        bounds[j] = (v, v)
    c = np.clip(np.array([b[0] for b in bounds[:n]]), -1.0, 1.0)
    return RewardCoefficients.from_vector(_polish(c, ds))


def _polish(c: np.ndarray, ds: np.ndarray, radius: float = 1e-6) -> np.ndarray:
    """Snap coordinates lying within solver tolerance of -1, 0 or 1.

    A snap is kept only if it does not lower the objective, so genuine
    interior vertex coordinates survive untouched.
    """
    c = c.copy()
    floor = lp_objective(c, ds) - 1e-12 * max(1.0, ds.shape[0])
    for j in range(c.size):
        nearest = float(np.round(c[j]))
        if nearest != c[j] and abs(c[j] - nearest) < radius:
            trial = c.copy()
            trial[j] = nearest
            if lp_objective(trial, ds) >= floor:
                c = trial
    return c


@dataclass
class IrlResult:
    coefficients: RewardCoefficients
    objective: float
    iteration_objectives: list[float] = field(default_factory=list)
    n_expert: int = 0
    n_non_expert: int = 0

    @property
    def iterations(self) -> int:
        return len(self.iteration_objectives)

    def to_dict(self) -> dict:
        return {
            "x": list(self.coefficients.x),
            "y": {str(a): self.coefficients.y[a] for a in ACTION_FEATURES},
            "objective": self.objective,
            "iterations": self.iterations,
            "iteration_objectives": self.iteration_objectives,
            "n_expert": self.n_expert,
            "n_non_expert": self.n_non_expert,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "IrlResult":
        coeffs = RewardCoefficients(tuple(d["x"]), {int(k): v for k, v in d["y"].items()})
        return cls(
            coeffs,
            float(d["objective"]),
            list(d.get("iteration_objectives", [])),
            int(d.get("n_expert", 0)),
            int(d.get("n_non_expert", 0)),
        )


def run_irl(expert: Sequence[Sequence[StateStep]], non_expert: Sequence[Sequence[StateStep]]) -> IrlResult:
    """Grow the condition pool one losing trajectory at a time and re-solve.

    The objective is logged after every addition. Only the final pool's
    solution is tie-broken to a canonical vertex, since intermediate argmaxes
    are not reported.
    """
    if not expert:
        raise ValueError("no expert trajectories")
    if not non_expert:
        warnings.warn("no non-expert trajectories; returning the all-ones initialisation", stacklevel=2)
        return IrlResult(RewardCoefficients.ones(), 0.0, [], len(expert), 0)
    expert_mean = np.mean([feature_totals(t) for t in expert], axis=0)
    pool = []
    history = []
    for i, traj in enumerate(non_expert):
        pool.append(expert_mean - feature_totals(traj))
        history.append(lp_optimum(np.array(pool)))
        log.debug("IRL iteration %d: objective %.6g", i + 1, history[-1])
    coeffs = solve_lp(np.array(pool))
    return IrlResult(coeffs, lp_objective(coeffs.vector, np.array(pool)), history, len(expert), len(non_expert))
