import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import simple_match
from inningsmdp.dls import bundled_table, dls_resources_left
from inningsmdp.evaluation import (
    ConfigurationError,
    DomainError,
    SaturationError,
    cross_validate,
    dls_resources,
    fold_assignment,
    make_interruption,
    percent_error,
    predicted_final_score,
)
from inningsmdp.match_data import Corpus
from inningsmdp.state_space import build_trajectory
from inningsmdp.value_model import NetworkConfig

SMALL_NET = NetworkConfig(5, (4,), epochs=2, learning_rate=0.05, batch_size=64, seed=0)


class TestProjection:
    @pytest.mark.parametrize("score,r,expected", [(100, 0.5, 200), (107, 0.6, 268), (0, 0.9, 0), (150, 0.0, 150)])
    def test_examples(self, score, r, expected):
        assert predicted_final_score(score, r) == expected

    def test_saturation(self):
        with pytest.raises(SaturationError, match="no scoring resources"):
            predicted_final_score(100, 1.0)

    def test_negative_r(self):
        with pytest.raises(DomainError):
            predicted_final_score(100, -0.01)

    @given(st.integers(1, 600).flatmap(lambda a: st.tuples(st.integers(1, a), st.just(a))))
    def test_exact_inverse(self, pair):
        score, actual = pair
        assert predicted_final_score(score, (actual - score) / actual) == actual

    def test_rounds_up_genuine_fractions(self):
        # 101 / 0.4 = 252.5 exactly; nothing to snap
        assert predicted_final_score(101, 0.6) == 253


class TestPercentError:
    @pytest.mark.parametrize("pred,actual,expected", [(268, 250, 7.2), (250, 250, 0.0), (240, 250, -4.0)])
    def test_examples(self, pred, actual, expected):
        assert percent_error(pred, actual) == expected

    def test_zero_actual(self):
        with pytest.raises(DomainError):
            percent_error(10, 0)

    @given(st.integers(1, 500), st.integers(0, 200))
    def test_antisymmetric(self, a, d):
        assert percent_error(a + d, a) == -percent_error(a - d, a)


class TestInterruption:
    def test_short_innings_skips(self):
        m = simple_match(runs_1=(1,) * (19 * 6))
        assert make_interruption(m, 1, np.random.default_rng(0)) is None

    def test_seeded_repeatable(self, synthetic_corpus):
        m = synthetic_corpus.matches[0]
        a = make_interruption(m, 1, np.random.default_rng(5))
        b = make_interruption(m, 1, np.random.default_rng(5))
        assert a == b

    def test_always_after_twenty_and_uniform(self):
        m = simple_match(runs_1=(1,) * 300)
        traj = build_trajectory(m, 1)
        rng = np.random.default_rng(1)
        draws = [make_interruption(m, 1, rng, traj) for _ in range(10_000)]
        overs = np.array([d.state.over for d in draws])
        assert overs.min() >= 20
        # 180 eligible positions, uniform: each over from 20 to 49 holds 1/30
        counts = np.bincount(overs, minlength=50)[20:]
        expected = 10_000 / 30
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        # 29 degrees of freedom; the 0.999 quantile is 58.3
        assert chi2 < 58.3
        d = draws[0]
        assert d.score_at_interruption == 6 * d.state.over + d.state.ball
        assert d.actual_final_score == 300

    def test_zero_score_so_far_flagged(self):
        m = simple_match(runs_1=(0,) * 294 + (1,) * 6)
        cuts = [make_interruption(m, 1, np.random.default_rng(i)) for i in range(40)]
        assert all(c.degenerate == (c.score_at_interruption == 0) for c in cuts)
        assert any(c.degenerate for c in cuts)


def test_dls_lookup_uses_completed_overs():
    table = bundled_table()
    m = simple_match(runs_1=(1,) * 300)
    cut = make_interruption(m, 1, np.random.default_rng(3))
    assert dls_resources(table, cut.state) == dls_resources_left(table, 50 - cut.state.over, cut.state.wickets)


class TestFolds:
    @given(st.integers(10, 400), st.integers(0, 2**31))
    def test_partition(self, n, seed):
        folds = fold_assignment(n, seed, 1)
        assert len(folds) == 10
        allidx = np.concatenate(folds)
        assert sorted(allidx.tolist()) == list(range(n))
        assert max(map(len, folds)) - min(map(len, folds)) <= 1

    def test_too_few_matches(self, synthetic_corpus):
        small = Corpus(synthetic_corpus.matches[:9])
        with pytest.raises(ConfigurationError, match="at least 10"):
            cross_validate(small, SMALL_NET, bundled_table(), 1, seed=0)

    def test_width_mismatch(self, synthetic_corpus):
        with pytest.raises(ConfigurationError):
            cross_validate(synthetic_corpus, SMALL_NET, bundled_table(), 2, seed=0)


def test_identical_matches_zero_spread():
    base = simple_match(runs_1=(1, 0, 2, 4, 0, 1) * 50)
    corpus = Corpus(tuple(simple_match(f"m{i}", runs_1=(1, 0, 2, 4, 0, 1) * 50) for i in range(20)))
    assert corpus.matches[0].final_score_1 == base.final_score_1
    report = cross_validate(corpus, SMALL_NET, bundled_table(), 1, seed=4)
    means = [f.model_mean for f in report.folds]
    assert len(set(means)) == 1
    assert report.std_of_means("model") == 0.0
    assert report.std_of_means("dls") == 0.0


def test_dls_column_independent_of_network(synthetic_corpus):
    table = bundled_table()
    a = cross_validate(synthetic_corpus, SMALL_NET, table, 1, seed=8)
    other = NetworkConfig(5, (3, 2), epochs=1, learning_rate=0.2, batch_size=16, seed=99)
    b = cross_validate(synthetic_corpus, other, table, 1, seed=8)
    assert [f.dls_errors for f in a.folds] == [f.dls_errors for f in b.folds]
    assert [f.model_errors for f in a.folds] != [f.model_errors for f in b.folds]


def test_report_reproducible_and_exports(synthetic_corpus):
    table = bundled_table()
    a = cross_validate(synthetic_corpus, SMALL_NET, table, 1, seed=2)
    b = cross_validate(synthetic_corpus, SMALL_NET, table, 1, seed=2)
    assert a.to_json() == b.to_json()
    assert len(a.folds) == 10
    assert sum(f.n_test_matches for f in a.folds) == len(synthetic_corpus)
    lines = a.to_csv().splitlines()
    assert lines[0] == "fold,method,mean_error_pct,n"
    assert len(lines) == 21
    summary = a.to_dict()["summary"]
    assert summary["dls"]["mean_error_pct"] == pytest.approx(np.mean([f.dls_mean for f in a.folds]))
    assert summary["model"]["std_error_pct"] == pytest.approx(np.std([f.model_mean for f in a.folds]))
    assert not math.isnan(a.mean_of_means("model"))


def test_second_innings_runs(synthetic_corpus):
    cfg = NetworkConfig(6, (4,), epochs=1, seed=0)
    report = cross_validate(synthetic_corpus, cfg, bundled_table(), 2, seed=1)
    assert report.innings_no == 2 and len(report.folds) == 10
