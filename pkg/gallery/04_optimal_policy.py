"""
Planning with the recovered reward
==================================

Estimate ball outcome probabilities from a corpus, solve the finite-horizon
problem by backward induction, and inspect the resulting batting policy.
"""

# %%
# A corpus and its empirical transition model.
import numpy as np

from inningsmdp.irl import partition_expert, run_irl
from inningsmdp.policy import TransitionModel, compute_q, estimate_transitions, nonoptimal_rate, optimal_policy
from inningsmdp.simulator import generate_corpus

mix = {0: 0.5, 1: 0.3, 2: 0.08, 3: 0.01, 4: 0.08, 6: 0.03}
corpus = generate_corpus(TransitionModel.constant(1, 0.03, mix), TransitionModel.constant(2, 0.03, mix), 200, seed=2)
model = estimate_transitions(corpus, 1)
print(model.visited.size, "visited first-innings states")

# %%
# Reward from the corpus's winners, then Q values by backward induction.
expert, non_expert, _ = partition_expert(corpus)
coeffs = run_irl(expert, non_expert).coefficients
q = compute_q(coeffs, model)
policy = optimal_policy(q)

# %%
# How often each action is chosen over live states.
live = policy.actions[:50, :10].reshape(-1)
print({a: int(np.sum(live == a)) for a in (0, 1, 2, 3, 4, 6)})

# %%
# How often the corpus already follows the policy.
model = model.with_nonoptimal(nonoptimal_rate(corpus, policy))
print("mean departure rate over visited states", round(float(model.nonoptimal_prob(model.visited).mean()), 3))
