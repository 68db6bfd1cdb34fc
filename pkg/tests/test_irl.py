import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import simple_match
from inningsmdp.irl import (
    IrlResult,
    RewardCoefficients,
    feature_totals,
    lp_objective,
    lp_optimum,
    partition_expert,
    reward,
    run_irl,
    solve_lp,
)
from inningsmdp.match_data import NO_RESULT, TIE, Corpus
from inningsmdp.state_space import FirstInningsState, StateStep, build_trajectory
from oracles import lp_grid_optimum, random_lp_problem


def step(state, action):
    return StateStep(FirstInningsState(*state), action, False, action, 0)


def coeffs(value):
    return RewardCoefficients.from_vector(np.full(10, float(value)))


class TestReward:
    def test_zero_coefficients(self):
        assert reward((10, 2, 3, 4, 0), 6, coeffs(0)) == 0

    def test_dot_ball(self):
        assert reward((10, 2, 3, 4, 0), 0, coeffs(1)) == 19

    def test_four(self):
        assert reward((10, 2, 3, 4, 0), 4, coeffs(1)) == 4019

    @pytest.mark.parametrize("action", [5, 7, -1])
    def test_invalid_action(self, action):
        with pytest.raises(ValueError):
            reward((0, 0, 0, 0, 0), action, coeffs(1))

    @given(st.floats(-1, 1), st.sampled_from([0, 1, 2, 3, 4, 6]))
    def test_linear_in_coefficients(self, alpha, action):
        rng = np.random.default_rng(0)
        c = RewardCoefficients.from_vector(rng.uniform(-1, 1, 10))
        scaled = RewardCoefficients.from_vector(alpha * c.vector)
        s = (12, 3, 7, 2, 1)
        assert reward(s, action, scaled) == pytest.approx(alpha * reward(s, action, c), abs=1e-9)

    def test_box_enforced(self):
        with pytest.raises(ValueError):
            RewardCoefficients.from_vector([1.5] + [0] * 9)


class TestFeatureTotals:
    def test_dot_balls(self):
        t = feature_totals([step((0, 0, 0, b, 0), 0) for b in range(3)])
        assert t[5:].tolist() == [0] * 5
        assert t[:5].tolist() == [0, 0, 0, 3, 0]

    def test_single_two(self):
        assert feature_totals([step((0, 0, 0, 0, 0), 2)]).tolist() == [0, 0, 0, 0, 0, 0, 2000, 0, 0, 0]

    def test_linearity(self):
        a = [step((1, 0, 2, 3, 0), 4), step((1, 0, 2, 4, 1), 1)]
        b = [step((7, 2, 9, 0, 0), 6)]
        assert np.array_equal(feature_totals(a + b), feature_totals(a) + feature_totals(b))


class TestPartition:
    def test_batting_first_always_wins(self):
        corpus = Corpus(tuple(simple_match(f"m{i}", winner="A") for i in range(5)))
        expert, non_expert, excluded = partition_expert(corpus)
        assert (len(expert), len(non_expert), excluded) == (5, 0, [])

    def test_ties_and_no_results_excluded(self):
        corpus = Corpus(
            (
                simple_match("w", winner="A"),
                simple_match("l", winner="B"),
                simple_match("t", winner=TIE),
                simple_match("n", winner=NO_RESULT),
            )
        )
        expert, non_expert, excluded = partition_expert(corpus)
        assert (len(expert), len(non_expert)) == (1, 1)
        assert sorted(excluded) == ["n", "t"]
        assert len(expert) + len(non_expert) + len(excluded) == len(corpus)


class TestSolveLp:
    def test_single_condition_picks_twos_over_threes(self):
        d = np.zeros(10)
        d[6], d[7] = 2000, -3000
        c = solve_lp(d[None, :])
        assert c.y[2] == 1.0 and c.y[3] == -1.0

    @pytest.mark.parametrize("j", range(10))
    @pytest.mark.parametrize("sign", [1, -1])
    def test_unit_vectors(self, j, sign):
        d = np.zeros((1, 10))
        d[0, j] = sign
        c = solve_lp(d).vector
        assert c[j] == sign
        assert lp_objective(c, d) == 1.0

    def test_opposed_pair(self):
        d = np.zeros((2, 10))
        d[0, 3], d[1, 3] = 1.0, -1.0
        c = solve_lp(d).vector
        assert lp_objective(c, d) == pytest.approx(0.0, abs=1e-12)
        assert -1.0 <= c[3] <= 0.0
        assert lp_grid_optimum(d, (3,)) == 0.0

    def test_all_zero_pool_lexicographic(self):
        assert solve_lp(np.zeros((3, 10))).vector.tolist() == [-1.0] * 10

    def test_interior_vertex_kept(self):
        # optimum 2 on the segment c0 = 1, |c1| <= 0.5; the smallest vertex is (1, -0.5)
        d = np.zeros((2, 10))
        d[0, :2] = [1.0, 2.0]
        d[1, :2] = [1.0, -2.0]
        c = solve_lp(d).vector
        assert c.tolist() == pytest.approx([1.0, -0.5] + [-1.0] * 8, abs=1e-8)
        assert lp_grid_optimum(d, (0, 1)) == 2.0
        assert lp_objective(c, d) == pytest.approx(2.0, abs=1e-8)

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_grid_search(self, seed):
        d, active = random_lp_problem(np.random.default_rng(seed))
        c = solve_lp(d).vector
        assert np.all(np.abs(c) <= 1 + 1e-9)
        assert lp_objective(c, d) == pytest.approx(lp_grid_optimum(d, active), abs=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e4))
    def test_positive_scaling_invariant(self, seed, alpha):
        d = np.random.default_rng(seed).normal(size=(4, 10))
        assert np.allclose(solve_lp(alpha * d).vector, solve_lp(d).vector, atol=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_optimum_not_below_origin(self, seed):
        d = np.random.default_rng(seed).normal(size=(5, 10))
        assert lp_optimum(d) >= -1e-9
        assert lp_objective(solve_lp(d).vector, d) == pytest.approx(lp_optimum(d), abs=1e-7)

    def test_zero_condition_changes_nothing(self):
        d = np.random.default_rng(1).normal(size=(3, 10))
        more = np.vstack([d, np.zeros(10)])
        assert np.array_equal(solve_lp(more).vector, solve_lp(d).vector)
        assert lp_optimum(more) == pytest.approx(lp_optimum(d), abs=1e-12)


def winner_loser_corpus(winner_runs, loser_runs, n=6, loser_wickets=()):
    matches = []
    for i in range(n):
        matches.append(simple_match(f"w{i}", runs_1=(winner_runs,) * 120, winner="A"))
        matches.append(simple_match(f"l{i}", runs_1=(loser_runs,) * 120, winner="B", wickets_1=loser_wickets))
    return Corpus(tuple(matches))


class TestRunIrl:
    def test_twos_beat_threes(self):
        expert, non_expert, _ = partition_expert(winner_loser_corpus(2, 3))
        result = run_irl(expert, non_expert)
        assert result.coefficients.y[2] > result.coefficients.y[3]
        assert result.iterations == len(non_expert) == 6

    def test_wickets_penalised(self):
        expert, non_expert, _ = partition_expert(winner_loser_corpus(1, 1, loser_wickets=(10, 40, 80)))
        assert run_irl(expert, non_expert).coefficients.x[1] <= 0

    def test_iteration_log_matches_pool(self):
        corpus = winner_loser_corpus(2, 1, n=3)
        expert, non_expert, _ = partition_expert(corpus)
        result = run_irl(expert, non_expert)
        mean = np.mean([feature_totals(t) for t in expert], axis=0)
        pools = [np.array([mean - feature_totals(t) for t in non_expert[: i + 1]]) for i in range(3)]
        assert result.iteration_objectives == pytest.approx([lp_optimum(p) for p in pools])
        assert result.objective == pytest.approx(result.iteration_objectives[-1])

    def test_no_non_expert_warns(self):
        expert = [build_trajectory(simple_match(), 1)]
        with pytest.warns(UserWarning, match="all-ones"):
            result = run_irl(expert, [])
        assert result.coefficients.vector.tolist() == [1.0] * 10

    def test_json_format(self):
        expert, non_expert, _ = partition_expert(winner_loser_corpus(2, 3, n=2))
        result = run_irl(expert, non_expert)
        doc = json.loads(result.to_json())
        assert set(doc["y"]) == {"1", "2", "3", "4", "6"} and len(doc["x"]) == 5
        assert doc["iterations"] == 2
        again = IrlResult.from_dict(doc)
        assert np.array_equal(again.coefficients.vector, result.coefficients.vector)
