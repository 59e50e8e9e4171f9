import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matpoincare import certification as cert
from matpoincare import markov_core as mc
from matpoincare import matrix_function as mf
from matpoincare import spectral as sp
from matpoincare.certification import Verdict


def test_psd_compare_examples():
    A = np.array([[2.0, 1j], [-1j, 3.0]])
    c = cert.psd_compare(A, A)
    assert c.difference_min_eigenvalue == 0 and c.verdict is Verdict.MARGINAL and c.holds
    c = cert.psd_compare(2 * np.eye(2), np.eye(2))
    assert c.difference_min_eigenvalue == pytest.approx(1.0) and c.verdict is Verdict.HOLDS
    c = cert.psd_compare(np.eye(2), np.diag([2.0, 0.0]))
    assert c.difference_min_eigenvalue == pytest.approx(-1.0) and c.verdict is Verdict.FAILS
    assert c.scale == pytest.approx(2.0)


def test_psd_compare_rejects_non_hermitian_and_shapes():
    with pytest.raises(ValueError):
        cert.psd_compare(np.array([[0, 1.0], [0, 0]]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        cert.psd_compare(np.eye(2), np.eye(3))


def test_certify_equality_case():
    chain = mc.build_birth_death([1.0, 2.0, 0.5], [0.7, 1.3, 2.2])
    spec = sp.eigendecompose(chain)
    M = np.array([[1.0, 2j], [0.5, -1.0]])
    f = cert.equality_witness(spec, 2, 1, M)
    r = cert.certify_matrix_poincare(chain, f)
    assert r.verdict is Verdict.MARGINAL
    assert abs(r.certificate.difference_min_eigenvalue) < 1e-9 * np.trace(M.conj().T @ M).real
    assert r.mode_gap_witness == 1
    assert r.alpha_valid


def test_certify_constant_function():
    chain = mc.build_complete_graph(4)
    r = cert.certify_matrix_poincare(chain, mf.MatrixFunction.constant(4, np.eye(3)))
    assert r.holds and r.mode_gap_witness is None


def test_certify_hypercube_hermitian():
    chain = mc.build_hypercube(3)
    f = mf.random_matrix_function(chain, 3, "hermitian", seed=11)
    r = cert.certify_matrix_poincare(chain, f, alpha=0.5)
    assert r.verdict in (Verdict.HOLDS, Verdict.MARGINAL)
    assert r.certificate.difference_min_eigenvalue >= -1e-10 * r.certificate.scale


def test_certify_alpha_must_be_positive():
    chain = mc.build_complete_graph(2)
    for bad in (0.0, -1.0):
        with pytest.raises(ValueError):
            cert.certify_matrix_poincare(chain, mf.MatrixFunction([1.0, 0.0]), alpha=bad)


def test_equality_witness_examples():
    two = mc.build_complete_graph(2)
    spec = sp.eigendecompose(two)
    r = cert.certify_matrix_poincare(two, cert.equality_witness(spec, 3, 1))
    assert r.verdict is Verdict.MARGINAL

    cube = mc.build_hypercube(2)
    spec = sp.eigendecompose(cube)
    M = np.array([[2.0, 1.0], [0.0, 1.0]])
    r = cert.certify_matrix_poincare(cube, cert.equality_witness(spec, 2, 3, M))
    # lambda_3 = 4, alpha = 1/2: difference (2 - 1) M^*M
    expected = (0.5 * 4 - 1) * np.linalg.eigvalsh(M.T @ M)[0]
    assert r.verdict is Verdict.HOLDS
    assert r.certificate.difference_min_eigenvalue == pytest.approx(expected, rel=1e-10)

    r = cert.certify_matrix_poincare(cube, cert.equality_witness(spec, 2, 1, np.zeros((2, 2))))
    assert r.holds
    with pytest.raises(IndexError):
        cert.equality_witness(spec, 2, 4)
    with pytest.raises(IndexError):
        cert.equality_witness(spec, 2, 0)


def test_monotone_in_alpha():
    chain = mc.build_metropolis([0.1, 0.2, 0.3, 0.4], np.full((4, 4), 0.25))
    f = mf.random_matrix_function(chain, 3, "general", seed=3)
    alpha = sp.poincare_constant(chain)
    prev = -np.inf
    for a in alpha * np.array([0.5, 0.9, 1.0, 1.5, 3.0]):
        m = cert.certify_matrix_poincare(chain, f, a).certificate.difference_min_eigenvalue
        assert m >= prev - 1e-12
        prev = m


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_mode_form_of_difference(seed):
    config = cert.FuzzConfig(seed=seed)
    t = cert.generate_trial(config, 0)
    spec = sp.eigendecompose(t.chain)
    r = cert.certify_matrix_poincare(t.chain, t.function, spec=spec)
    M = mf.mode_decompose(t.function, spec).coefficients
    weights = r.alpha_used * spec.eigenvalues[1:] - 1.0
    expected = np.einsum("i,ilj,ilk->jk", weights, np.conj(M), M)
    assert np.linalg.norm(r.difference - expected, 2) <= 1e-9 * max(np.trace(r.variance).real, 1)


def test_scalar_reduction_agrees(rng):
    chain = mc.build_complete_graph(3)
    spec = sp.eigendecompose(chain)
    r = cert.certify_scalar_reduction(chain, spec.eigenfunctions[1])
    assert r.verdict is Verdict.MARGINAL
    assert cert.certify_scalar_reduction(chain, np.ones(3)).holds
    for _ in range(20):
        f = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert cert.scalar_agreement(chain, f) <= 1e-12


def test_fuzz_small_run_and_determinism():
    config = cert.FuzzConfig(num_trials=120, seed=5)
    a = cert.fuzz(config)
    b = cert.fuzz(config)
    assert a.failures == [] and a.worst_slack >= -1e-8
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


def test_fuzz_parallel_matches_serial():
    config = cert.FuzzConfig(num_trials=40, seed=1, alpha_factor=0.9)
    serial = cert.fuzz(config)
    parallel = cert.fuzz(cert.FuzzConfig(num_trials=40, seed=1, alpha_factor=0.9, jobs=2))
    assert json.dumps(serial.to_dict()) == json.dumps(parallel.to_dict())


def test_fuzz_negative_control_finds_eigenmode_failures():
    config = cert.FuzzConfig(num_trials=100, seed=2, alpha_factor=0.9, function_kinds=("eigenmode",))
    summary = cert.fuzz(config)
    assert summary.failures
    rec = summary.failures[0]
    assert set(rec) == {"chain", "function", "seed", "min_eig"}
    chain = mc.chain_from_dict(rec["chain"])
    f = mf.MatrixFunction.from_dict(rec["function"])
    replay = cert.certify_matrix_poincare(chain, f, 0.9 * sp.poincare_constant(chain))
    assert replay.verdict is Verdict.FAILS
    assert replay.certificate.difference_min_eigenvalue == pytest.approx(rec["min_eig"], rel=1e-9)


def test_fuzz_config_validation():
    with pytest.raises(ValueError):
        cert.FuzzConfig(n_range=(1, 5))
    with pytest.raises(ValueError):
        cert.FuzzConfig(chain_kinds=("bogus",))
    with pytest.raises(ValueError):
        cert.FuzzConfig(chain_kinds=("hypercube",), n_range=(5, 7))
    with pytest.raises(ValueError):
        cert.FuzzConfig(function_kinds=())


@pytest.mark.parametrize("kind", cert.CHAIN_KINDS)
def test_random_chain_kinds_respect_range(kind):
    rng = np.random.default_rng(0)
    for _ in range(10):
        chain = cert.random_chain(kind, (2, 12), rng)
        assert 2 <= chain.n <= 12
