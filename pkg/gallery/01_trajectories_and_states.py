"""
Trajectories and the state index
================================

Build a small synthetic corpus, walk one innings as a sequence of states, and
look at the Monte Carlo targets the value model learns from.
"""

# %%
# A behavioural model that bowls every ball from the same outcome mix.
import numpy as np

from inningsmdp.policy import TransitionModel
from inningsmdp.simulator import generate_corpus
from inningsmdp.state_space import build_trajectory, decode_state, encode_state, mc_targets

mix = {0: 0.5, 1: 0.3, 2: 0.08, 3: 0.01, 4: 0.08, 6: 0.03}
model_1 = TransitionModel.constant(1, 0.03, mix)
model_2 = TransitionModel.constant(2, 0.03, mix)
corpus = generate_corpus(model_1, model_2, n_matches=20, seed=0)
match = corpus.matches[0]
print(match.match_id, match.final_score_1, "vs", match.final_score_2, "winner", match.winner)

# %%
# Each delivery becomes a step holding the state the ball was bowled in.
traj = build_trajectory(match, 1)
for step in traj[:3]:
    print(step.state, "runs", step.runs, "wicket", step.wicket)

# %%
# States map to a dense row-major index and back.
s = traj[150].state
i = encode_state(s)
print(s, "->", i, "->", decode_state(i, 1))

# %%
# Targets are the share of the final total still to come.
targets = np.array([t.target for t in mc_targets(traj, match.final_score_1)])
print("first", targets[0], "halfway", round(targets[len(targets) // 2], 3), "last", round(targets[-1], 3))
