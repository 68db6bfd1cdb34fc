"""
Resources left: a learned value model against the DLS table
===========================================================

Train the resources-left network on synthetic innings, then cross-validate its
projected totals against the bundled DLS approximation.
"""

# %%
# Synthetic corpus and training arrays.
from inningsmdp.dls import bundled_table, dls_resources_left
from inningsmdp.evaluation import cross_validate, predicted_final_score, training_arrays
from inningsmdp.policy import TransitionModel
from inningsmdp.simulator import generate_corpus
from inningsmdp.state_space import FirstInningsState, score_band
from inningsmdp.value_model import NetworkConfig, forward, normalize_features, train

mix = {0: 0.5, 1: 0.3, 2: 0.08, 3: 0.01, 4: 0.08, 6: 0.03}
corpus = generate_corpus(TransitionModel.constant(1, 0.025, mix), TransitionModel.constant(2, 0.025, mix), 150, seed=1)
x, t = training_arrays(corpus, 1)
print(x.shape[0], "training states")

# %%
# Fit the network.
config = NetworkConfig(5, (32, 16), epochs=10, learning_rate=0.05, batch_size=64, seed=0)
net, report = train(config, x, targets=t)
print("final MSE", round(report.final_mse, 5))

# %%
# Project a total from 150 for 3 after 30 overs, both ways.
state = FirstInningsState(30, 3, score_band(150), 0, 0)
r_model = float(forward(net, normalize_features(state)))
r_dls = dls_resources_left(bundled_table(), 20, 3)
print("model", predicted_final_score(150, r_model), "DLS", predicted_final_score(150, r_dls))

# %%
# Ten-fold comparison of percentage errors at random interruptions.
cv = cross_validate(corpus, config, bundled_table(), 1, seed=0)
for method in ("model", "dls"):
    print(method, round(cv.mean_of_means(method), 2), "% +/-", round(cv.std_of_means(method), 2))
