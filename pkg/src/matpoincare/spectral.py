"""Spectral geometry of a reversible generator.

Everything here lives in the ``mu``-weighted inner product
``<f, g> = sum_x mu(x) conj(f(x)) g(x)``, in which ``-L`` is self-adjoint.
The eigenbasis is obtained by symmetrizing ``-L`` with ``diag(mu)**0.5``,
solving with a symmetric eigensolver and mapping back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov_core import ReversibleGenerator

ZERO_EIG_TOL = 1e-10
GAP_FLOOR = 1e-12
ORTHO_TOL = 1e-10
RESIDUAL_TOL = 1e-8
DIRICHLET_TOL = 1e-10


class SpectralError(ArithmeticError):
    """Eigendecomposition did not meet its accuracy guarantees."""


def _as_measure(mu) -> np.ndarray:
    return np.asarray(getattr(mu, "weights", mu), dtype=float)


def _as_function(f, n: int) -> np.ndarray:
    f = np.asarray(f)
    if f.shape != (n,):
        raise ValueError(f"function has shape {f.shape}, expected ({n},)")
    return f


def weighted_inner(f, g, mu) -> complex:
    """``sum_x mu(x) conj(f(x)) g(x)``; conjugate-linear in ``f``."""
    mu = _as_measure(mu)
    f = _as_function(f, mu.size)
    g = _as_function(g, mu.size)
    return complex(np.sum(mu * np.conj(f) * g))


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of ``-L``, ascending, orthonormal in the weighted product.

    ``eigenfunctions[i]`` is ``g_i``; ``g_0`` is the constant function 1.
    """

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    measure: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def poincare_constant(self) -> float:
        return 1.0 / self.gap

    alpha = poincare_constant

    def to_dict(self) -> dict:
        g = self.eigenfunctions
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "alpha": self.poincare_constant,
            "eigenfunctions": np.stack([g.real, np.imag(g)], axis=-1).tolist(),
        }


def _fix_sign(vecs: np.ndarray) -> np.ndarray:
    # largest-modulus entry made positive, first index wins ties
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _tie_groups(vals: np.ndarray, tol: float):
    start = 0
    for k in range(1, vals.size + 1):
        if k == vals.size or vals[k] - vals[k - 1] > tol:
            yield start, k
            start = k


def eigendecompose(chain: ReversibleGenerator) -> SpectralDecomposition:
    """Eigenvalues ``0 = l_0 < l_1 <= ...`` and eigenfunctions of ``-L``.

    Inside a degenerate eigenspace any orthonormal basis is acceptable;
    the one returned is made deterministic by the sign convention and a
    lexicographic sort of the sign-fixed eigenfunctions.
    """
    mu = chain.mu
    L = chain.rates
    n = chain.n
    sq = np.sqrt(mu)
    S = (sq[:, None] * (-L)) / sq[None, :]
    S = 0.5 * (S + S.T)
    try:
        vals, U = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver failed: {exc}") from exc

    lam_max = max(abs(vals[-1]), 1.0)
    if abs(vals[0]) >= ZERO_EIG_TOL * lam_max:
        raise SpectralError(f"smallest eigenvalue {vals[0]:.3e} is not zero")
    if vals[1] <= GAP_FLOOR:
        raise SpectralError(f"spectral gap {vals[1]:.3e} is numerically zero")
    vals = vals.copy()
    vals[0] = 0.0

    G = _fix_sign(U / sq[:, None])
    G[:, 0] = 1.0

    order = list(range(n))
    for lo, hi in _tie_groups(vals, 1e-10 * lam_max):
        if hi - lo > 1 and lo > 0:
            block = order[lo:hi]
            order[lo:hi] = sorted(block, key=lambda j: tuple(-G[:, j]))
    vals = vals[order]
    G = G[:, order]

    gram = (G.T * mu) @ G
    if np.abs(gram - np.eye(n)).max() > ORTHO_TOL:
        raise SpectralError("eigenfunctions are not orthonormal to tolerance")
    resid = -L @ G - G * vals
    wnorm = np.sqrt(mu @ resid**2)
    if wnorm.max() > RESIDUAL_TOL * lam_max:
        raise SpectralError(f"eigen-residual {wnorm.max():.3e} exceeds tolerance")

    eigvals = np.ascontiguousarray(vals)
    eigfuns = np.ascontiguousarray(G.T)
    eigvals.setflags(write=False)
    eigfuns.setflags(write=False)
    return SpectralDecomposition(eigenvalues=eigvals, eigenfunctions=eigfuns, measure=mu)


def spectral_gap(chain: ReversibleGenerator) -> float:
    return eigendecompose(chain).gap


def poincare_constant(chain: ReversibleGenerator) -> float:
    """Tightest constant in ``alpha * E(f, f) >= Var(f)``, i.e. ``1 / gap``."""
    return eigendecompose(chain).poincare_constant


def _edge_dirichlet(chain: ReversibleGenerator, f: np.ndarray) -> float:
    x, y = chain.edges()
    return 0.5 * float(np.sum(chain.mu[x] * chain.rates[x, y] * np.abs(f[y] - f[x]) ** 2))


def scalar_dirichlet(chain: ReversibleGenerator, f) -> float:
    """Dirichlet energy ``<f, -L f>``, cross-checked against the edge sum."""
    f = _as_function(f, chain.n)
    mu = chain.mu
    val = complex(np.sum(mu * np.conj(f) * -(chain.rates @ f)))
    scale = float(np.sum(mu * np.abs(np.diag(chain.rates)) * np.abs(f) ** 2))
    tol = DIRICHLET_TOL * max(scale, np.finfo(float).tiny)
    if abs(val.imag) > tol:
        raise SpectralError(f"Dirichlet form has imaginary part {val.imag:.3e}")
    edge = _edge_dirichlet(chain, f)
    if abs(val.real - edge) > tol:
        raise SpectralError(f"operator form {val.real!r} and edge form {edge!r} disagree")
    return val.real


def scalar_variance(f, mu) -> float:
    mu = _as_measure(mu)
    f = _as_function(f, mu.size)
    centered = f - np.sum(mu * f)
    return float(np.sum(mu * np.abs(centered) ** 2))


@dataclass(frozen=True)
class ScalarPoincareReport:
    lhs: float
    rhs: float
    slack: float
    alpha: float

    @property
    def ok(self) -> bool:
        return self.slack >= -1e-10 * max(self.lhs, self.rhs, 1.0)


def verify_scalar_poincare(chain: ReversibleGenerator, f, alpha: float | None = None,
                           spec: SpectralDecomposition | None = None) -> ScalarPoincareReport:
    """Compare ``alpha * E(f, f)`` with ``Var(f)``."""
    if alpha is None:
        alpha = (spec or eigendecompose(chain)).poincare_constant
    lhs = alpha * scalar_dirichlet(chain, f)
    rhs = scalar_variance(f, chain.mu)
    return ScalarPoincareReport(lhs=lhs, rhs=rhs, slack=lhs - rhs, alpha=float(alpha))
