"""Empirical transition statistics and the optimal batting policy.

Per-state outcome counts are kept sparsely (visited states only) together with
two fallback levels: the ``(over, wickets)`` aggregate and the innings-wide
total. A query resolves to the most specific level that has observations.

The optimal policy comes from backward induction over the first-innings
state space. Intended runs succeed whenever no wicket falls; a wicket scores
nothing. Only the score *band* is in the state, so an intended ``a`` runs
moves the band up with probability ``a / 10`` (score uniform within its
band).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .irl import ACTION_SCALE, RewardCoefficients
from .match_data import Corpus, MatchRecord, is_eligible
from .state_space import (
    ACTIONS,
    FIRST_SHAPE,
    TrajectoryError,
    build_trajectory,
    decode_many,
    trajectory_arrays,
)

N_ACTIONS = len(ACTIONS)
# outcome columns: wicket, then runs for each action in ACTIONS order
N_OUTCOMES = 1 + N_ACTIONS
_ACTION_POS = {a: i for i, a in enumerate(ACTIONS)}


class DpError(FloatingPointError):
    pass


@dataclass
class SparseCounts:
    """Counts per visited state with ``(over, wickets)`` and global fallbacks."""

    innings_no: int
    states: np.ndarray  # sorted, unique state indices
    counts: np.ndarray  # (n_states, m)
    by_over_wickets: np.ndarray  # (51, 11, m)
    overall: np.ndarray  # (m,)

    @classmethod
    def from_observations(cls, innings_no: int, indices, columns, m: int) -> "SparseCounts":
        indices = np.asarray(indices, dtype=np.int64)
        columns = np.asarray(columns, dtype=np.int64)
        states, inverse = np.unique(indices, return_inverse=True)
        counts = np.zeros((states.size, m))
        np.add.at(counts, (inverse, columns), 1.0)
        agg = np.zeros((51, 11, m))
        if indices.size:
            comps = decode_many(indices, innings_no)
            np.add.at(agg, (comps[:, 0], comps[:, 1], columns), 1.0)
        return cls(innings_no, states, counts, agg, agg.sum(axis=(0, 1)))

    @classmethod
    def constant(cls, innings_no: int, row: Sequence[float]) -> "SparseCounts":
        row = np.asarray(row, dtype=float)
        m = row.size
        return cls(innings_no, np.zeros(0, dtype=np.int64), np.zeros((0, m)), np.zeros((51, 11, m)), row)

    def exact(self, indices) -> np.ndarray:
        """Rows for exactly these states; zeros where unvisited."""
        indices = np.asarray(indices, dtype=np.int64)
        out = np.zeros(indices.shape + (self.counts.shape[1],))
        if self.states.size:
            pos = np.minimum(np.searchsorted(self.states, indices), self.states.size - 1)
            hit = self.states[pos] == indices
            out[hit] = self.counts[pos[hit]]
        return out

    def resolve(self, indices, columns: Sequence[int] | slice = slice(None)) -> np.ndarray:
        """Counts from the most specific level with a positive total over ``columns``."""
        indices = np.asarray(indices, dtype=np.int64)
        out = self.exact(indices)
        need = out[..., columns].sum(axis=-1) <= 0
        if np.any(need):
            comps = decode_many(indices[need], self.innings_no)
            out[need] = self.by_over_wickets[comps[:, 0], comps[:, 1]]
            need = out[..., columns].sum(axis=-1) <= 0
            if np.any(need):
                out[need] = self.overall
        return out

    def to_dict(self) -> dict:
        return {
            "innings_no": self.innings_no,
            "states": self.states.tolist(),
            "counts": self.counts.tolist(),
            "by_over_wickets": self.by_over_wickets.tolist(),
            "overall": self.overall.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SparseCounts":
        m = len(d["overall"])
        return cls(
            int(d["innings_no"]),
            np.array(d["states"], dtype=np.int64),
            np.array(d["counts"], dtype=float).reshape(-1, m),
            np.array(d["by_over_wickets"], dtype=float).reshape(51, 11, m),
            np.array(d["overall"], dtype=float),
        )


@dataclass
class TransitionModel:
    innings_no: int
    outcomes: SparseCounts
    # columns: observed non-wicket decisions, decisions that differ from the policy
    nonoptimal: SparseCounts | None = None

    @property
    def visited(self) -> np.ndarray:
        return self.outcomes.states

    def visits(self, indices) -> np.ndarray:
        return self.outcomes.exact(indices).sum(axis=-1)

    def wicket_prob(self, indices) -> np.ndarray:
        c = self.outcomes.resolve(indices)
        total = c.sum(axis=-1)
        return np.divide(c[..., 0], total, out=np.zeros_like(total), where=total > 0)

    def run_dist(self, indices) -> np.ndarray:
        """Distribution over ``ACTIONS`` given no wicket; a dot ball if nothing is known."""
        c = self.outcomes.resolve(indices, slice(1, None))[..., 1:]
        total = c.sum(axis=-1, keepdims=True)
        dist = np.divide(c, total, out=np.zeros_like(c), where=total > 0)
        dist[total[..., 0] <= 0, 0] = 1.0
        return dist

    def nonoptimal_prob(self, indices) -> np.ndarray:
        if self.nonoptimal is None:
            raise ValueError("non-optimal rates have not been estimated for this model")
        c = self.nonoptimal.resolve(indices)
        return np.divide(c[..., 1], c[..., 0], out=np.zeros(c.shape[:-1]), where=c[..., 0] > 0)

    def with_nonoptimal(self, rates: SparseCounts) -> "TransitionModel":
        return TransitionModel(self.innings_no, self.outcomes, rates)

    @classmethod
    def constant(cls, innings_no: int, wicket_prob: float, run_dist: dict | Sequence[float], nonoptimal_prob: float | None = None):
        """A model with no visited states, so every query hits the global level."""
        if isinstance(run_dist, dict):
            run_dist = [run_dist.get(a, 0.0) for a in ACTIONS]
        run_dist = np.asarray(run_dist, dtype=float)
        row = np.concatenate([[wicket_prob], (1.0 - wicket_prob) * run_dist / run_dist.sum()])
        nonopt = None
        if nonoptimal_prob is not None:
            nonopt = SparseCounts.constant(innings_no, [1.0, nonoptimal_prob])
        return cls(innings_no, SparseCounts.constant(innings_no, row), nonopt)

    def to_dict(self) -> dict:
        return {
            "innings_no": self.innings_no,
            "outcomes": self.outcomes.to_dict(),
            "nonoptimal": self.nonoptimal.to_dict() if self.nonoptimal is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransitionModel":
        nonopt = SparseCounts.from_dict(d["nonoptimal"]) if d.get("nonoptimal") else None
        return cls(int(d["innings_no"]), SparseCounts.from_dict(d["outcomes"]), nonopt)


def _innings_arrays(corpus: Iterable[MatchRecord], innings_no: int) -> list[dict]:
    out = []
    for m in corpus:
        if not is_eligible(m, innings_no):
            continue
        try:
            out.append(trajectory_arrays(build_trajectory(m, innings_no), innings_no))
        except TrajectoryError:
            continue
    return out


def estimate_transitions(corpus: Corpus | Sequence[MatchRecord], innings_no: int) -> TransitionModel:
    """Count wicket and run outcomes per visited state."""
    arrays = _innings_arrays(corpus, innings_no)
    if arrays:
        idx = np.concatenate([a["index"] for a in arrays])
        wk = np.concatenate([a["wicket"] for a in arrays])
        act = np.concatenate([a["action"] for a in arrays])
    else:
        idx = np.zeros(0, np.int64)
        wk = np.zeros(0, bool)
        act = np.zeros(0, np.int64)
    lut = np.zeros(7, dtype=np.int64)
    for a, i in _ACTION_POS.items():
        lut[a] = i
    columns = np.where(wk, 0, 1 + lut[act])
    return TransitionModel(innings_no, SparseCounts.from_observations(innings_no, idx, columns, N_OUTCOMES))


# --------------------------------------------------------------------------
# dynamic programming


@dataclass
class QTable:
    q: np.ndarray  # FIRST_SHAPE + (6,)
    v: np.ndarray  # FIRST_SHAPE

    def __getitem__(self, state):
        return self.q[tuple(state)]


@dataclass
class PolicyTable:
    actions: np.ndarray  # FIRST_SHAPE, action values (runs)

    def __call__(self, indices) -> np.ndarray:
        return self.actions.reshape(-1)[np.asarray(indices, dtype=np.int64)]

    def action(self, state) -> int:
        return int(self.actions[tuple(state)])

    def to_dict(self) -> dict:
        return {"shape": list(self.actions.shape), "actions": "".join(map(str, self.actions.reshape(-1).tolist()))}

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyTable":
        flat = np.frombuffer(d["actions"].encode("ascii"), dtype=np.uint8) - ord("0")
        return cls(flat.astype(np.int8).reshape(d["shape"]))


def reward_table(coeffs: RewardCoefficients) -> np.ndarray:
    """Reward for every first-innings state and action: ``FIRST_SHAPE + (6,)``."""
    x = np.asarray(coeffs.x)
    grids = np.meshgrid(*(np.arange(n) for n in FIRST_SHAPE), indexing="ij")
    state_part = sum(x[i] * grids[i] for i in range(5))
    action_part = coeffs.action_weights() * ACTION_SCALE * np.array(ACTIONS)
    return state_part[..., None] + action_part


def compute_q(coeffs: RewardCoefficients, model: TransitionModel, innings_no: int = 1) -> QTable:
    """Backward induction from the last ball of the 50th over.

    Terminal states (50 overs bowled or 10 wickets down) keep their immediate
    reward in Q and have value zero.
    """
    if innings_no != 1:
        raise ValueError("optimal policies are defined for the first innings only")
    n_over, n_wk, n_band, n_ball, n_flag = FIRST_SHAPE
    q = reward_table(coeffs)
    v = np.zeros(FIRST_SHAPE)

    advance = np.array(ACTIONS) / 10.0  # chance the band ticks up
    band = np.arange(n_band)
    band_up = np.minimum(band + 1, n_band - 1)
    all_idx = np.arange(np.prod(FIRST_SHAPE)).reshape(FIRST_SHAPE)

    for pos in range(299, -1, -1):
        over, ball = divmod(pos, 6)
        nover, nball = divmod(pos + 1, 6)
        v_next = v[nover, :, :, nball, 0]  # (11, 50); zero beyond the innings
        # no wicket: (11, 50, 6)
        cont_ok = (1 - advance) * v_next[:, :, None] + advance * v_next[:, band_up][:, :, None]
        # wicket: one more down, band unchanged
        cont_wk = np.zeros((n_wk, n_band))
        cont_wk[:-1] = v_next[1:]
        pw = model.wicket_prob(all_idx[over, :, :, ball, :])  # (11, 50, 2)
        cont = pw[..., None] * cont_wk[:, :, None, None] + (1 - pw[..., None]) * cont_ok[:, :, None, :]
        # ten wickets down is terminal: reward only, value zero
        q[over, :-1, :, ball] += cont[:-1]
        v[over, :-1, :, ball] = q[over, :-1, :, ball].max(axis=-1)
        if not np.all(np.isfinite(v[over, :, :, ball, :])):
            raise DpError(f"non-finite value at over {over} ball {ball}")
    return QTable(q, v)


def optimal_policy(q: QTable | np.ndarray) -> PolicyTable:
    """Greedy action per state; ties go to the fewest runs."""
    qa = q.q if isinstance(q, QTable) else np.asarray(q)
    best = np.argmax(qa, axis=-1)  # first maximum, i.e. the smallest action
    return PolicyTable(np.array(ACTIONS, dtype=np.int8)[best])


def nonoptimal_rate(corpus: Corpus | Sequence[MatchRecord], policy: PolicyTable) -> SparseCounts:
    """How often observed non-wicket deliveries departed from the policy.

    Columns are ``(observations, departures)``; use
    :meth:`TransitionModel.with_nonoptimal` to attach the result.
    """
    arrays = _innings_arrays(corpus, 1)
    idx_parts, col_parts = [], []
    for a in arrays:
        keep = ~a["wicket"]
        idx = a["index"][keep]
        differs = a["action"][keep] != policy(idx)
        # every observation counts in column 0, departures also in column 1
        idx_parts += [idx, idx[differs]]
        col_parts += [np.zeros(idx.size, np.int64), np.ones(int(differs.sum()), np.int64)]
    idx = np.concatenate(idx_parts) if idx_parts else np.zeros(0, np.int64)
    cols = np.concatenate(col_parts) if col_parts else np.zeros(0, np.int64)
    return SparseCounts.from_observations(1, idx, cols, 2)

