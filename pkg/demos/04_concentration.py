"""
Deviation tails and ergodic averages.

The exact tail P(||f(X) - E f|| >= t) under mu sits below the
second-moment bound alpha * tr E_d(f, f) / t^2. A simulated trajectory
shows time averages approaching E f.
"""

import numpy as np

import matpoincare as mp
from matpoincare.matrix_function import matrix_mean

chain = mp.build_product(mp.build_complete_graph(4), mp.build_two_state(0.5, 1.5))
f = mp.random_matrix_function(chain, 2, "lipschitz", seed=3)

t = np.linspace(0.1, 1.5, 8)
rep = mp.tail_report(chain, f, t, chain_id="K4 x two-state", function_id="lipschitz seed 3")
print(rep.to_csv())

mean = matrix_mean(f, chain.mu)
for horizon in (10.0, 100.0, 1000.0, 10000.0):
    path = mp.sample_trajectory(chain, horizon, seed=0)
    err = np.linalg.norm(mp.ergodic_average(path, f) - mean, 2)
    print(f"horizon {horizon:7.0f}: {len(path):6d} jumps, ||time average - E f|| = {err:.4f}")
