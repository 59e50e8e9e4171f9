import numpy as np
import pytest
from scipy import stats

from matpoincare import concentration as conc
from matpoincare import markov_core as mc
from matpoincare import matrix_function as mf
from matpoincare import spectral as sp


def test_exact_tail_examples():
    chain = mc.build_complete_graph(2)
    const = mf.MatrixFunction.constant(2, np.eye(2))
    np.testing.assert_array_equal(conc.exact_tail(chain, const, [0.1, 1.0]), [0, 0])
    f = mf.MatrixFunction(np.stack([np.diag([1.0, 0.0]), np.diag([-1.0, 0.0])]))
    assert conc.exact_tail(chain, f, [0.5])[0] == pytest.approx(1.0)
    assert conc.exact_tail(chain, f, [1.5])[0] == 0
    with pytest.raises(ValueError):
        conc.exact_tail(chain, f, [1.0, 0.5])


def test_chebyshev_bound_examples():
    chain = mc.build_complete_graph(2)
    spec = sp.eigendecompose(chain)
    const = mf.MatrixFunction.constant(2, np.eye(3))
    np.testing.assert_array_equal(conc.chebyshev_bound(chain, const, [0.5, 1.0]), [0, 0])
    for d in (1, 2, 3):
        f = mf.MatrixFunction.tensor(spec.eigenfunctions[1], np.eye(d))
        # alpha * tr(lambda_1 I_d) / t^2 = d, clamped at 1
        assert conc.chebyshev_bound(chain, f, [1.0])[0] == pytest.approx(1.0, rel=1e-14)
        assert conc.chebyshev_bound(chain, f, [2.0 * d])[0] == pytest.approx(1 / (4 * d))
    with pytest.raises(ValueError):
        conc.chebyshev_bound(chain, f, [1.0], alpha=0.4)
    with pytest.raises(ValueError):
        conc.chebyshev_bound(chain, f, [0.0, 1.0])


@pytest.mark.parametrize("seed", range(10))
def test_tail_soundness(seed):
    rng = np.random.default_rng(seed)
    chain = mc.build_metropolis(rng.dirichlet(np.ones(6)) * 0.99 + 0.01 / 6, np.full((6, 6), 1 / 6))
    f = mf.random_matrix_function(chain, 3, "general", seed=seed)
    t = np.linspace(0.1, 4.0, 10)
    rep = conc.tail_report(chain, f, t)
    assert rep.sound
    assert np.all(rep.bound <= 1.0)


def test_tail_report_serialization():
    chain = mc.build_hypercube(2)
    f = mf.random_matrix_function(chain, 2, "hermitian", seed=0)
    rep = conc.tail_report(chain, f, [0.5, 1.0], chain_id="c", function_id="f")
    lines = rep.to_csv().splitlines()
    assert lines[0] == "t,empirical,bound"
    assert len(lines) == 3
    assert set(rep.to_dict()) == {"chain_id", "function_id", "thresholds", "empirical", "bound"}


def test_trajectory_basic():
    chain = mc.build_complete_graph(2)
    p = conc.sample_trajectory(chain, 0.0, seed=3)
    assert len(p) == 1 and p.times[0] == 0.0
    a = conc.sample_trajectory(chain, 50.0, seed=3)
    b = conc.sample_trajectory(chain, 50.0, seed=3)
    np.testing.assert_array_equal(a.times, b.times)
    np.testing.assert_array_equal(a.states, b.states)
    assert np.all(np.diff(a.times) > 0) and a.times[-1] < 50.0
    assert np.all(a.states[1:] != a.states[:-1])


def test_two_state_occupation():
    chain = mc.build_complete_graph(2)
    horizon = 20_000.0
    p = conc.sample_trajectory(chain, horizon, seed=8, initial_state=0)
    occ = p.holding_times()[p.states == 0].sum() / horizon
    # stationary occupation 1/2; jump rate 1 gives ~horizon/2 independent holds
    sigma = np.sqrt(0.25 / (horizon / 2))
    assert abs(occ - 0.5) < 3 * sigma


def test_holding_times_are_exponential():
    chain = mc.build_birth_death([1.0, 3.0], [2.0, 0.5])
    p = conc.sample_trajectory(chain, 20_000.0, seed=21)
    holds = p.holding_times()[:-1]
    for x in range(chain.n):
        h = holds[p.states[:-1] == x][:10_000]
        assert h.size > 1000
        rate = -chain.rates[x, x]
        assert stats.kstest(h, "expon", args=(0, 1 / rate)).pvalue > 0.01


def test_ergodic_average_examples():
    chain = mc.build_hypercube(2)
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    p = conc.sample_trajectory(chain, 10.0, seed=0)
    np.testing.assert_allclose(conc.ergodic_average(p, mf.MatrixFunction.constant(4, M)), M, atol=1e-12)
    f = mf.random_matrix_function(chain, 2, "general", seed=1)
    p0 = conc.sample_trajectory(chain, 0.0, seed=0, initial_state=2)
    np.testing.assert_array_equal(conc.ergodic_average(p0, f), f.blocks[2])


def test_ergodic_average_converges():
    chain = mc.build_hypercube(3)
    spec = sp.eigendecompose(chain)
    f = mf.random_matrix_function(chain, 2, "hermitian", seed=5)
    mean = mf.matrix_mean(f, chain.mu)
    horizon = 1e4
    radius = 5 * np.sqrt(spec.poincare_constant * np.trace(mf.matrix_dirichlet(chain, f)).real / horizon)
    hits = 0
    seeds = range(40)
    for s in seeds:
        p = conc.sample_trajectory(chain, horizon, seed=s)
        hits += np.linalg.norm(conc.ergodic_average(p, f) - mean, 2) <= radius
    assert hits >= 0.95 * len(seeds)
