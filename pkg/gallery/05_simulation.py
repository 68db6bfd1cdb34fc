"""
Simulating the rest of an innings and whole matches
===================================================

Draw posterior final-score distributions from a mid-innings position and play
full matches between two behavioural models.
"""

# %%
# Identical behaviour for both sides.
from inningsmdp.policy import TransitionModel
from inningsmdp.simulator import SimulationConfig, Start, posterior_distribution, simulate_matches, win_rate

mix = {0: 0.5, 1: 0.3, 2: 0.08, 3: 0.01, 4: 0.08, 6: 0.03}
model_1 = TransitionModel.constant(1, 0.03, mix)
model_2 = TransitionModel.constant(2, 0.03, mix)

# %%
# Final scores from 150 for 3 after 30 overs.
config = SimulationConfig(n_sims=2000, seed=0, start=Start(over=30, wickets=3, score=150))
dist = posterior_distribution(config, model_1)
print("mean", round(dist.mean, 1), "std", round(dist.std, 1))
print(dist.to_csv().splitlines()[:4])

# %%
# A chase of 240 from 100 for 2 after 25 overs.
chase = SimulationConfig(n_sims=2000, seed=0, start=Start(over=25, wickets=2, score=100, target=240))
won = posterior_distribution(chase, model_2).histogram
print("chase succeeds in", sum(c for s, c in won.items() if s > 240) / 2000)

# %%
# With identical models the side batting first wins about half the time.
outcomes, _, _ = simulate_matches(model_1, model_2, None, seed=0, n_matches=500)
print("team batting first wins", round(win_rate(outcomes), 3))
