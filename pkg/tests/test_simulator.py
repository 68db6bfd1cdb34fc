import numpy as np
import pytest

from conftest import constant_models
from oracles import length_weighted_gap
from inningsmdp.policy import PolicyTable, TransitionModel
from inningsmdp.simulator import (
    BEHAVIORAL,
    OPTIMAL,
    ScoreDistribution,
    SimulationConfig,
    SimulationConfigError,
    Start,
    generate_corpus,
    posterior_distribution,
    simulate_innings,
    simulate_match,
    simulate_matches,
    simulator_error_report,
    win_rate,
)
from inningsmdp.state_space import FIRST_SHAPE, build_trajectory


def always(runs, innings_no=1, wicket_prob=0.0, nonoptimal=None):
    return TransitionModel.constant(innings_no, wicket_prob, {runs: 1.0}, nonoptimal)


def policy_of(action):
    return PolicyTable(np.full(FIRST_SHAPE, action, dtype=np.int8))


class TestDegenerate:
    def test_always_single(self):
        dist = posterior_distribution(SimulationConfig(20, 0), always(1))
        assert dist.histogram == {300: 20}

    def test_certain_wicket(self):
        sim = simulate_innings(always(4, wicket_prob=1.0), None, Start(), np.random.default_rng(0))
        assert (sim.final_score, sim.wickets, sim.balls) == (0, 10, 10)

    def test_mid_innings_start(self):
        start = Start(over=40, ball=3, wickets=2, score=180)
        dist = posterior_distribution(SimulationConfig(5, 0, start=start), always(2))
        assert dist.histogram == {180 + 2 * 57: 5}

    def test_chase_stops_on_first_scoring_ball(self):
        start = Start(over=10, wickets=0, score=150, target=150)
        sim = simulate_innings(always(4, innings_no=2), None, start, np.random.default_rng(0))
        assert (sim.final_score, sim.balls) == (154, 1)

    def test_optimal_follows_policy(self):
        model = always(0, nonoptimal=0.0)
        dist = posterior_distribution(SimulationConfig(3, 0, OPTIMAL), model, policy_of(2))
        assert dist.histogram == {600: 3}

    def test_optimal_with_full_departure_is_behavioral(self):
        model = always(1, nonoptimal=1.0)
        dist = posterior_distribution(SimulationConfig(3, 0, OPTIMAL), model, policy_of(6))
        assert dist.histogram == {300: 3}


class TestMatches:
    def test_deterministic_winner(self):
        m1 = always(1)
        m2 = TransitionModel.constant(2, 0.0, {1: 1.0})
        outcome = simulate_match(m1, m2, None, seed=0)
        # chasing 300 with singles ends level on 300
        assert (outcome.score_1, outcome.score_2, outcome.winner) == (300, 300, "tie")

    def test_first_innings_ahead_by_one(self):
        m1 = TransitionModel.constant(1, 0.0, {1: 1.0})
        m2 = TransitionModel.constant(2, 0.0, {0: 1 / 300, 1: 299 / 300})
        outcomes, _, _ = simulate_matches(m1, m2, None, seed=1, n_matches=30)
        assert all(o.score_1 == 300 for o in outcomes)
        assert all((o.winner == "team_1") == (o.score_2 < 300) for o in outcomes)

    def test_symmetric_models_even(self):
        m1, m2 = constant_models()
        outcomes, _, _ = simulate_matches(m1, m2, None, seed=5, n_matches=400)
        assert 0.4 <= win_rate(outcomes) <= 0.6

    def test_same_seed_same_result(self):
        m1, m2 = constant_models()
        assert simulate_match(m1, m2, None, 9) == simulate_match(m1, m2, None, 9)

    def test_match_independent_of_batch_size(self):
        m1, m2 = constant_models()
        few, _, _ = simulate_matches(m1, m2, None, 2, 3)
        many, _, _ = simulate_matches(m1, m2, None, 2, 50)
        assert few == many[:3]

    def test_win_rate_excludes_ties(self):
        assert np.isnan(win_rate([]))


class TestPosterior:
    def test_histogram_counts(self):
        m1, _ = constant_models()
        dist = posterior_distribution(SimulationConfig(137, 4), m1)
        assert dist.n == 137

    def test_single_simulation(self):
        m1, _ = constant_models()
        dist = posterior_distribution(SimulationConfig(1, 4), m1)
        assert dist.n == 1 and dist.std == 0.0

    def test_law_of_large_numbers(self):
        # each ball scores 0 or 6 evenly: the total is 6 * Binomial(300, 1/2)
        model = TransitionModel.constant(1, 0.0, {0: 0.5, 6: 0.5})
        dist = posterior_distribution(SimulationConfig(2000, 0), model)
        sd = 6 * np.sqrt(300 * 0.25)
        assert abs(dist.mean - 900) < 4 * sd / np.sqrt(2000)
        assert dist.std == pytest.approx(sd, rel=0.1)

    def test_prefix_stable(self):
        m1, _ = constant_models()
        a = posterior_distribution(SimulationConfig(10, 8), m1)
        b = posterior_distribution(SimulationConfig(10, 8), m1)
        assert a.histogram == b.histogram

    def test_round_trips(self):
        dist = ScoreDistribution.from_scores([250, 260, 250, 199], OPTIMAL)
        assert ScoreDistribution.from_csv(dist.to_csv(), OPTIMAL) == dist
        assert ScoreDistribution.from_dict(dist.to_dict()) == dist
        assert dist.to_csv().splitlines()[0] == "final_score,count"
        assert dist.mean == pytest.approx(239.75)


class TestConfigErrors:
    def test_non_positive_sims(self):
        with pytest.raises(SimulationConfigError):
            SimulationConfig(0)

    def test_unknown_mode(self):
        with pytest.raises(SimulationConfigError):
            SimulationConfig(5, mode="greedy")

    def test_optimal_needs_policy(self):
        with pytest.raises(SimulationConfigError):
            posterior_distribution(SimulationConfig(5, 0, OPTIMAL), always(1, nonoptimal=0.0))

    def test_optimal_needs_rates(self):
        with pytest.raises(SimulationConfigError):
            posterior_distribution(SimulationConfig(5, 0, OPTIMAL), always(1), policy_of(1))

    def test_target_must_match_innings(self):
        with pytest.raises(SimulationConfigError):
            posterior_distribution(SimulationConfig(5, 0), always(1, innings_no=2))
        with pytest.raises(SimulationConfigError):
            posterior_distribution(SimulationConfig(5, 0, start=Start(target=100)), always(1))

    def test_optimal_second_innings(self):
        with pytest.raises(SimulationConfigError):
            SimulationConfig(5, 0, OPTIMAL, Start(target=100))


class TestErrorReport:
    def test_deterministic(self, synthetic_corpus):
        m1, m2 = constant_models()
        cfg = SimulationConfig(50, 3)
        a = simulator_error_report(synthetic_corpus.matches[:20], {1: m1, 2: m2}, None, cfg)
        b = simulator_error_report(synthetic_corpus.matches[:20], {1: m1, 2: m2}, None, cfg)
        assert [r.to_json() for r in a] == [r.to_json() for r in b]
        assert [(r.innings_no, r.mode) for r in a] == [(1, BEHAVIORAL), (2, BEHAVIORAL)]

    def test_self_consistent(self, synthetic_corpus):
        m1, m2 = constant_models()
        (report,) = simulator_error_report(synthetic_corpus, {1: m1, 2: m2}, None, SimulationConfig(200, 0), innings=(1,))
        assert len(report.errors) > 100
        gap, se = length_weighted_gap(synthetic_corpus, report)
        assert abs(gap) < 4 * se

    def test_aggressive_policy_overshoots(self, synthetic_corpus):
        m1, m2 = constant_models()
        m1 = m1.with_nonoptimal(always(0, nonoptimal=0.0).nonoptimal)
        reports = simulator_error_report(synthetic_corpus.matches[:30], {1: m1}, policy_of(6), SimulationConfig(50, 1))
        by_mode = {r.mode: r for r in reports}
        assert by_mode[OPTIMAL].mean > by_mode[BEHAVIORAL].mean
        assert by_mode[OPTIMAL].match_ids == by_mode[BEHAVIORAL].match_ids


class TestGeneratedCorpus:
    def test_invariants(self, synthetic_corpus):
        for m in synthetic_corpus:
            for k in (1, 2):
                traj = build_trajectory(m, k)
                assert len(traj) <= 300
                assert all(s.state.extra_flag == 0 for s in traj)
                assert sum(s.wicket for s in traj) <= 10
            assert m.final_score_2 <= m.final_score_1 + 6

    def test_reproducible(self):
        m1, m2 = constant_models()
        a = generate_corpus(m1, m2, 5, seed=11)
        b = generate_corpus(m1, m2, 5, seed=11)
        assert a.matches == b.matches
        assert a.source == "simulated:sim:11"

    def test_scores_match_simulation(self):
        m1, m2 = constant_models()
        corpus = generate_corpus(m1, m2, 8, seed=2)
        outcomes, _, _ = simulate_matches(m1, m2, None, 2, 8)
        assert [(m.final_score_1, m.final_score_2) for m in corpus] == [(o.score_1, o.score_2) for o in outcomes]
