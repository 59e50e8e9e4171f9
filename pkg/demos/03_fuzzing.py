"""
Randomized soundness sweep.

fuzz() draws chains from every builder family and functions of every
kind, certifies each at alpha = 1 / gap and keeps any counterexample.
"""

import matpoincare as mp

summary = mp.fuzz(mp.FuzzConfig(num_trials=500, seed=0))
print(f"{summary.trials} trials, {len(summary.failures)} failures, worst slack {summary.worst_slack:.2e}")

# With alpha deliberately too small the certifier must find failures.
neg = mp.fuzz(mp.FuzzConfig(num_trials=200, seed=0, alpha_factor=0.9, function_kinds=("eigenmode",)))
print(f"alpha_factor=0.9: {len(neg.failures)} of {neg.trials} eigenmode trials fail")
first = neg.failures[0]
print("first counterexample: n =", first["chain"]["n"], "d =", first["function"]["d"],
      "min_eig =", first["min_eig"])
