"""Interrupted-innings experiment: project final scores, score them, cross-validate.

A match is interrupted at a random ball position from the 21st over on
(``over >= 20``). The resources-left ratio ``r`` at that state, from either
the value network or the DLS table, projects the final score as
``ceil(score / (1 - r))``, which is then compared with what the side really
made.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dls import DlsTable, dls_resources_left
from .match_data import Corpus, MatchRecord, is_eligible
from .seeding import derive_rng
from .state_space import InningsState, StateStep, TrajectoryError, build_trajectory, trajectory_arrays
from .value_model import NetworkConfig, ValueNetwork, forward, normalize_features, normalize_many, train

INTERRUPT_FROM_OVER = 20
N_FOLDS = 10

# Relative slack when snapping score / (1 - r) to an integer before the ceiling.
_SNAP = 1e-9


class SaturationError(ValueError):
    """r >= 1 leaves no scoring resources used, so no projection exists."""


class DomainError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


def predicted_final_score(score_at_interruption: int, r: float) -> int:
    """Project a final total from the score so far and resources left ``r``.

    The quotient is snapped to the nearest integer when it is within floating
    roundoff of it, so an exactly consistent ``r`` reproduces the actual total
    instead of overshooting by one.
    """
    if r < 0:
        raise DomainError(f"resources left must be non-negative, got {r}")
    if r >= 1:
        raise SaturationError(f"no scoring resources model: r={r} >= 1")
    if score_at_interruption < 0:
        raise DomainError("score must be non-negative")
    x = score_at_interruption / (1.0 - r)
    nearest = round(x)
    if abs(x - nearest) <= _SNAP * max(1.0, abs(x)):
        return int(nearest)
    return int(math.ceil(x))


def percent_error(predicted: int, actual: int) -> float:
    if actual <= 0:
        raise DomainError("actual score must be positive")
    return (predicted - actual) * 100 / actual


@dataclass(frozen=True)
class Interruption:
    match_id: str
    innings_no: int
    state: InningsState
    score_at_interruption: int
    actual_final_score: int
    position: int

    @property
    def overs_remaining(self) -> int:
        return 50 - self.state.over

    @property
    def degenerate(self) -> bool:
        return self.score_at_interruption == 0


def make_interruption(
    match: MatchRecord,
    innings_no: int,
    rng: np.random.Generator,
    trajectory: Sequence[StateStep] | None = None,
) -> Interruption | None:
    """Interrupt uniformly among ball positions with ``over >= 20``.

    Returns ``None`` (skip) when the innings never reached the 21st over or
    scored nothing.
    """
    if trajectory is None:
        try:
            trajectory = build_trajectory(match, innings_no)
        except TrajectoryError:
            return None
    positions = [i for i, s in enumerate(trajectory) if s.state.over >= INTERRUPT_FROM_OVER]
    actual = sum(s.runs for s in trajectory)
    if not positions or actual <= 0:
        return None
    k = positions[int(rng.integers(len(positions)))]
    step = trajectory[k]
    return Interruption(match.match_id, innings_no, step.state, step.score_before, actual, k)


def model_resources(network: ValueNetwork, state: InningsState) -> float:
    return forward(network, normalize_features(state))


def dls_resources(table: DlsTable, state: InningsState) -> float:
    return dls_resources_left(table, 50 - state.over, state.wickets)


# --------------------------------------------------------------------------
# cross-validation


@dataclass
class FoldResult:
    fold: int
    n_train_matches: int
    n_test_matches: int
    n_skipped: int
    n_degenerate: int
    model_errors: list[float] = field(default_factory=list)
    dls_errors: list[float] = field(default_factory=list)
    train_mse: float = float("nan")

    @property
    def model_mean(self) -> float:
        return float(np.mean(self.model_errors)) if self.model_errors else float("nan")

    @property
    def dls_mean(self) -> float:
        return float(np.mean(self.dls_errors)) if self.dls_errors else float("nan")


@dataclass
class FoldReport:
    folds: list[FoldResult]
    innings_no: int
    seed: int
    network_config: NetworkConfig

    def _means(self, method: str) -> np.ndarray:
        vals = [f.model_mean if method == "model" else f.dls_mean for f in self.folds]
        return np.array([v for v in vals if not math.isnan(v)])

    def mean_of_means(self, method: str) -> float:
        return float(np.mean(self._means(method)))

    def std_of_means(self, method: str) -> float:
        """Population standard deviation of the fold means."""
        return float(np.std(self._means(method)))

    def model_beats_dls(self) -> int:
        """Folds where the model's mean error is closer to zero than the DLS mean."""
        return sum(abs(f.model_mean) < abs(f.dls_mean) for f in self.folds if f.model_errors)

    def to_dict(self) -> dict:
        return {
            "innings_no": self.innings_no,
            "seed": self.seed,
            "network_config": self.network_config.to_dict(),
            "folds": [
                {
                    "fold": f.fold,
                    "n_train_matches": f.n_train_matches,
                    "n_test_matches": f.n_test_matches,
                    "n_skipped": f.n_skipped,
                    "n_degenerate": f.n_degenerate,
                    "train_mse": f.train_mse,
                    "model_mean_error_pct": f.model_mean,
                    "dls_mean_error_pct": f.dls_mean,
                    "model_errors": f.model_errors,
                    "dls_errors": f.dls_errors,
                }
                for f in self.folds
            ],
            "summary": {
                method: {"mean_error_pct": self.mean_of_means(method), "std_error_pct": self.std_of_means(method)}
                for method in ("model", "dls")
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("fold,method,mean_error_pct,n\n")
        for f in self.folds:
            buf.write(f"{f.fold},model,{f.model_mean!r},{len(f.model_errors)}\n")
            buf.write(f"{f.fold},dls,{f.dls_mean!r},{len(f.dls_errors)}\n")
        return buf.getvalue()


@dataclass
class _Prepared:
    match: MatchRecord
    trajectory: list[StateStep]
    features: np.ndarray
    targets: np.ndarray


def _prepare(match: MatchRecord, innings_no: int) -> _Prepared:
    traj = build_trajectory(match, innings_no)
    cols = trajectory_arrays(traj, innings_no)
    final = int(cols["runs"].sum())
    targets = (final - cols["score_before"]) / final
    return _Prepared(match, traj, normalize_many(cols["components"]), targets)


def training_arrays(corpus, innings_no: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalised features and remaining-runs targets for every eligible innings."""
    prepared = [_prepare(m, innings_no) for m in corpus if is_eligible(m, innings_no)]
    if not prepared:
        raise ConfigurationError(f"no eligible innings-{innings_no} data")
    return np.concatenate([p.features for p in prepared]), np.concatenate([p.targets for p in prepared])


def fold_assignment(n: int, seed: int, innings_no: int, n_folds: int = N_FOLDS) -> list[np.ndarray]:
    """Seeded shuffle then contiguous split into ``n_folds`` position arrays."""
    order = derive_rng(seed, "folds", innings_no).permutation(n)
    return [np.sort(part) for part in np.array_split(order, n_folds)]


def cross_validate(
    corpus: Corpus | Sequence[MatchRecord],
    network_config: NetworkConfig,
    dls_table: DlsTable,
    innings_no: int,
    seed: int,
    *,
    n_folds: int = N_FOLDS,
) -> FoldReport:
    """Train on nine folds, interrupt each held-out match once, score both methods.

    The j-th test match of every fold draws its interruption from the stream
    ``(seed, "interrupt", innings_no, j)``, so fold membership is the only
    thing that changes the DLS column.
    """
    expected_width = 5 if innings_no == 1 else 6
    if network_config.input_width != expected_width:
        raise ConfigurationError(f"innings {innings_no} needs input_width={expected_width}")
    prepared = [_prepare(m, innings_no) for m in corpus if is_eligible(m, innings_no)]
    if len(prepared) < n_folds:
        raise ConfigurationError(f"need at least {n_folds} eligible matches, found {len(prepared)}")
    folds = fold_assignment(len(prepared), seed, innings_no, n_folds)
    results = []
    for fold_no, test_idx in enumerate(folds):
        test_set = set(test_idx.tolist())
        train_items = [p for i, p in enumerate(prepared) if i not in test_set]
        x = np.concatenate([p.features for p in train_items])
        t = np.concatenate([p.targets for p in train_items])
        net, report = train(network_config, x, targets=t)
        res = FoldResult(fold_no, len(train_items), len(test_idx), 0, 0, train_mse=report.final_mse)
        for j, i in enumerate(test_idx):
            p = prepared[i]
            cut = make_interruption(p.match, innings_no, derive_rng(seed, "interrupt", innings_no, j), p.trajectory)
            if cut is None:
                res.n_skipped += 1
                continue
            if cut.degenerate:
                res.n_degenerate += 1
                continue
            for r, sink in ((model_resources(net, cut.state), res.model_errors), (dls_resources(dls_table, cut.state), res.dls_errors)):
                pred = predicted_final_score(cut.score_at_interruption, r)
                sink.append(percent_error(pred, cut.actual_final_score))
        results.append(res)
    return FoldReport(results, innings_no, seed, network_config)
