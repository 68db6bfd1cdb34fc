"""
Recovering a batting reward from winning innings
================================================

Winners here score in twos and losers in threes. The linear program asks
which reward makes the winners' feature totals look best.
"""

# %%
# Hand-made matches: equal lengths, different scoring habits.
from inningsmdp.irl import partition_expert, run_irl
from inningsmdp.match_data import Corpus, DeliveryRecord, build_match


def innings(runs, n=120):
    return [DeliveryRecord(1, i // 6, i % 6, runs, False, False) for i in range(n)]


matches = [build_match(f"w{i}", "A", "B", "A", [innings(2)]) for i in range(5)]
matches += [build_match(f"l{i}", "A", "B", "B", [innings(3)]) for i in range(5)]
expert, non_expert, excluded = partition_expert(Corpus(tuple(matches)))
print(len(expert), "expert,", len(non_expert), "non-expert trajectories")

# %%
# Solve, adding one non-expert condition at a time.
result = run_irl(expert, non_expert)
c = result.coefficients
print("state weights", [round(v, 2) for v in c.x])
print("action weights", {a: round(v, 2) for a, v in sorted(c.y.items())})
print("objective by iteration", [round(v, 1) for v in result.iteration_objectives])
