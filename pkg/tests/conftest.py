import numpy as np
import pytest


def brute_force_spectrum(L):
    """Eigenvalues of -L from a general (nonsymmetric) eigensolve, ascending."""
    vals = np.linalg.eigvals(-np.asarray(L, dtype=float))
    return np.sort(vals.real)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
