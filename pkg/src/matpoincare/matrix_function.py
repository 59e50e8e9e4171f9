"""Matrix-valued functions on a finite state space.

A :class:`MatrixFunction` is stored as a dense ``(n, d, d)`` complex
array of blocks ``f(x)``. The matrix-valued inner product is
``<f, g>_d = sum_x mu(x) f(x)^* g(x)``, a ``d x d`` matrix rather than a
number, and the matrix Dirichlet form is ``<f, (-L (x) I) f>_d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov_core import ReversibleGenerator
from .spectral import SpectralDecomposition, eigendecompose

#: Largest supported matrix dimension.
D_CAP = 64

HERMITIAN_TOL = 1e-12
CROSS_CHECK_TOL = 1e-10

FUNCTION_KINDS = ("hermitian", "general", "eigenmode", "lipschitz")


class ShapeMismatch(ValueError):
    pass


class CrossCheckError(ArithmeticError):
    """Two routes to the same quantity disagree beyond tolerance."""


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    return np.conj(np.swapaxes(a, -1, -2))


@dataclass(frozen=True, eq=False)
class MatrixFunction:
    """Map ``x -> f(x)`` from ``{0, ..., n-1}`` into ``d x d`` complex matrices.

    With ``hermitian=True`` every block must equal its conjugate
    transpose to within ``1e-12`` entrywise.
    """

    blocks: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        b = np.array(self.blocks, dtype=complex)
        if b.ndim == 1:
            b = b[:, None, None]
        if b.ndim != 3 or b.shape[1] != b.shape[2] or b.shape[1] < 1:
            raise ShapeMismatch(f"blocks must have shape (n, d, d), got {b.shape}")
        if b.shape[1] > D_CAP:
            raise ShapeMismatch(f"matrix dimension {b.shape[1]} exceeds cap {D_CAP}")
        if self.hermitian:
            resid = np.abs(b - dagger(b)).max()
            if resid > HERMITIAN_TOL:
                raise ValueError(f"blocks flagged hermitian have residual {resid:.3e}")
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    @property
    def d(self) -> int:
        return self.blocks.shape[1]

    def __getitem__(self, x):
        return self.blocks[x]

    @classmethod
    def constant(cls, n: int, M, hermitian: bool = False) -> "MatrixFunction":
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        return cls(np.broadcast_to(M, (n,) + M.shape), hermitian=hermitian)

    @classmethod
    def from_scalar(cls, values) -> "MatrixFunction":
        values = np.asarray(values)
        return cls(values.reshape(-1, 1, 1), hermitian=bool(np.isrealobj(values)))

    @classmethod
    def tensor(cls, g, M) -> "MatrixFunction":
        """Elementary tensor ``x -> g(x) M``."""
        g = np.asarray(g)
        M = np.atleast_2d(np.asarray(M, dtype=complex))
        herm = bool(np.isrealobj(g)) and np.allclose(M, M.conj().T, rtol=0, atol=HERMITIAN_TOL)
        return cls(g[:, None, None] * M[None], hermitian=herm)

    def right_multiply(self, A) -> "MatrixFunction":
        """Blockwise product ``x -> f(x) A`` with a constant matrix."""
        return MatrixFunction(self.blocks @ np.asarray(A, dtype=complex))

    def to_dict(self) -> dict:
        b = self.blocks
        return {
            "n": self.n,
            "d": self.d,
            "hermitian": bool(self.hermitian),
            "blocks": np.stack([b.real, b.imag], axis=-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MatrixFunction":
        try:
            raw = np.asarray(data["blocks"], dtype=float)
            if raw.ndim != 4 or raw.shape[-1] != 2:
                raise ShapeMismatch(f"blocks must be nested [n][d][d][re, im], got shape {raw.shape}")
            f = cls(raw[..., 0] + 1j * raw[..., 1], hermitian=bool(data.get("hermitian", False)))
        except (KeyError, TypeError) as exc:
            raise ShapeMismatch(f"malformed matrix function: {exc!r}") from exc
        if f.n != int(data.get("n", f.n)) or f.d != int(data.get("d", f.d)):
            raise ShapeMismatch("declared n/d do not match blocks")
        return f


def _blocks(f) -> np.ndarray:
    return f.blocks if isinstance(f, MatrixFunction) else MatrixFunction(f).blocks


def _mu(mu) -> np.ndarray:
    return np.asarray(getattr(mu, "weights", mu), dtype=float)


def _check_pair(f: np.ndarray, g: np.ndarray, mu: np.ndarray) -> None:
    if f.shape != g.shape:
        raise ShapeMismatch(f"shapes differ: {f.shape} vs {g.shape}")
    if f.shape[0] != mu.size:
        raise ShapeMismatch(f"function has {f.shape[0]} states, measure has {mu.size}")


def _check_chain(chain: ReversibleGenerator, f: np.ndarray) -> None:
    if f.shape[0] != chain.n:
        raise ShapeMismatch(f"function has {f.shape[0]} states, chain has {chain.n}")


def matrix_inner(f, g, mu) -> np.ndarray:
    """``sum_x mu(x) f(x)^* g(x)`` as a ``d x d`` matrix."""
    fb, gb, mu = _blocks(f), _blocks(g), _mu(mu)
    _check_pair(fb, gb, mu)
    return np.einsum("x,xji,xjk->ik", mu, np.conj(fb), gb)


def matrix_mean(f, mu) -> np.ndarray:
    fb, mu = _blocks(f), _mu(mu)
    if fb.shape[0] != mu.size:
        raise ShapeMismatch(f"function has {fb.shape[0]} states, measure has {mu.size}")
    return np.einsum("x,xij->ij", mu, fb)


def centered(f, mu) -> MatrixFunction:
    """``f - E_mu f``."""
    fb = _blocks(f)
    herm = bool(getattr(f, "hermitian", False))
    return MatrixFunction(fb - matrix_mean(fb, mu)[None], hermitian=herm)


def _hermitize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


def matrix_variance(f, mu) -> np.ndarray:
    """``<f - E f, f - E f>_d``, Hermitian positive semidefinite."""
    return _hermitize(matrix_inner(centered(f, mu), centered(f, mu), mu))


def _dirichlet_scale(chain: ReversibleGenerator, fb: np.ndarray) -> float:
    hs2 = np.sum(np.abs(fb) ** 2, axis=(1, 2))
    return max(float(np.sum(chain.mu * np.abs(np.diag(chain.rates)) * hs2)), np.finfo(float).tiny)


def apply_generator(chain: ReversibleGenerator, f) -> np.ndarray:
    """Blockwise ``(L f)(x) = sum_y L(x, y) f(y)``."""
    fb = _blocks(f)
    _check_chain(chain, fb)
    return np.einsum("xy,yij->xij", chain.rates, fb)


def matrix_dirichlet_operator(chain: ReversibleGenerator, f) -> np.ndarray:
    """Unsymmetrized ``sum_x mu(x) f(x)^* (-L f)(x)``."""
    fb = _blocks(f)
    return matrix_inner(fb, -apply_generator(chain, fb), chain.mu)


def matrix_dirichlet_edge(chain: ReversibleGenerator, f) -> np.ndarray:
    """Edge sum ``1/2 sum_{x != y} mu(x) L(x,y) (f(y)-f(x))^* (f(y)-f(x))``."""
    fb = _blocks(f)
    _check_chain(chain, fb)
    x, y = chain.edges()
    diff = fb[y] - fb[x]
    w = 0.5 * chain.mu[x] * chain.rates[x, y]
    return np.einsum("e,eji,ejk->ik", w, np.conj(diff), diff)


def matrix_dirichlet(chain: ReversibleGenerator, f) -> np.ndarray:
    """Matrix Dirichlet form ``<f, (-L (x) I) f>_d``, Hermitized.

    The operator form is checked against the edge form, and its
    anti-Hermitian part against zero, both to ``1e-10`` of a scale
    ``sum_x mu(x) |L(x,x)| ||f(x)||_HS^2``.

    Raises
    ------
    CrossCheckError
        If either check fails, which points at a non-reversible chain.
    """
    fb = _blocks(f)
    op = matrix_dirichlet_operator(chain, fb)
    tol = CROSS_CHECK_TOL * _dirichlet_scale(chain, fb)
    anti = np.abs(op - op.conj().T).max()
    if anti > tol:
        raise CrossCheckError(f"Dirichlet form anti-Hermitian residual {anti:.3e} > {tol:.3e}")
    edge = matrix_dirichlet_edge(chain, fb)
    gap = np.abs(op - edge).max()
    if gap > tol:
        raise CrossCheckError(f"operator and edge Dirichlet forms differ by {gap:.3e}")
    return _hermitize(op)


@dataclass(frozen=True, eq=False)
class ModeCoefficients:
    """Expansion ``f = mean + sum_{i>=1} g_i (x) M_i`` over the eigenbasis.

    ``coefficients[i - 1]`` holds ``M_i``.
    """

    coefficients: np.ndarray
    mean: np.ndarray

    @property
    def d(self) -> int:
        return self.mean.shape[0]


def _check_spec(spec: SpectralDecomposition, fb: np.ndarray) -> None:
    if fb.shape[0] != spec.n:
        raise ShapeMismatch(f"function has {fb.shape[0]} states, decomposition has {spec.n}")


def mode_decompose(f, spec: SpectralDecomposition, mu=None) -> ModeCoefficients:
    """``M_i = sum_x mu(x) conj(g_i(x)) (f(x) - E f)`` for ``i = 1..n-1``."""
    fb = _blocks(f)
    _check_spec(spec, fb)
    mu = spec.measure if mu is None else _mu(mu)
    if mu.size != spec.n or not np.allclose(mu, spec.measure, rtol=1e-12, atol=0):
        raise ShapeMismatch("measure does not match the decomposition")
    mean = matrix_mean(fb, mu)
    fc = fb - mean[None]
    G = spec.eigenfunctions[1:]
    coeffs = np.einsum("ix,x,xjk->ijk", np.conj(G), mu, fc)
    return ModeCoefficients(coefficients=coeffs, mean=mean)


def mode_reconstruct(modes: ModeCoefficients, spec: SpectralDecomposition) -> MatrixFunction:
    if modes.coefficients.shape[0] != spec.n - 1:
        raise ShapeMismatch(f"{modes.coefficients.shape[0]} modes for {spec.n} states")
    blocks = modes.mean[None] + np.einsum("ix,ijk->xjk", spec.eigenfunctions[1:], modes.coefficients)
    return MatrixFunction(blocks)


def dirichlet_via_modes(modes: ModeCoefficients, spec: SpectralDecomposition) -> np.ndarray:
    """``sum_i lambda_i M_i^* M_i``."""
    M = modes.coefficients
    return _hermitize(np.einsum("i,ilj,ilk->jk", spec.eigenvalues[1:], np.conj(M), M))


def variance_via_modes(modes: ModeCoefficients) -> np.ndarray:
    """``sum_i M_i^* M_i``."""
    M = modes.coefficients
    return _hermitize(np.einsum("ilj,ilk->jk", np.conj(M), M))


# -- slicing -----------------------------------------------------------------


def slice(f, v) -> np.ndarray:
    """Vector-valued function ``x -> f(x) v`` as an ``(n, d)`` array."""
    fb = _blocks(f)
    v = np.asarray(v, dtype=complex)
    if v.shape != (fb.shape[1],):
        raise ShapeMismatch(f"vector has shape {v.shape}, expected ({fb.shape[1]},)")
    return fb @ v


def vector_inner(fv, gv, mu) -> complex:
    """``sum_x mu(x) fv(x)^* gv(x)`` for vector-valued functions."""
    fv, gv, mu = np.asarray(fv), np.asarray(gv), _mu(mu)
    if fv.shape != gv.shape or fv.shape[0] != mu.size:
        raise ShapeMismatch(f"shapes {fv.shape}, {gv.shape} with {mu.size} states")
    return complex(np.einsum("x,xi,xi->", mu, np.conj(fv), gv))


@dataclass(frozen=True)
class SliceReport:
    lhs: complex
    rhs: complex
    residual: float

    @property
    def ok(self) -> bool:
        return self.residual < 1e-10 * (1.0 + abs(self.lhs))


def verify_slice_identity(f, g, v, mu) -> SliceReport:
    """Compare ``v^* <f, g>_d v`` with ``<f_v, g_v>``."""
    v = np.asarray(v, dtype=complex)
    lhs = complex(np.conj(v) @ matrix_inner(f, g, mu) @ v)
    rhs = vector_inner(slice(f, v), slice(g, v), mu)
    return SliceReport(lhs=lhs, rhs=rhs, residual=abs(lhs - rhs))


# -- random fixtures ---------------------------------------------------------


def _gaussian_general(rng, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _gaussian_hermitian(rng, shape) -> np.ndarray:
    a = _gaussian_general(rng, shape)
    return (a + dagger(a)) / 2.0


def random_matrix_function(chain: ReversibleGenerator, d: int, kind: str = "hermitian",
                           seed=0, *, spec: SpectralDecomposition | None = None,
                           mode_index: int | None = None, lipschitz: float = 1.0) -> MatrixFunction:
    """Random test function on the states of ``chain``.

    Kinds
    -----
    hermitian
        Independent Gaussian Hermitian blocks.
    general
        Independent complex Gaussian blocks.
    eigenmode
        ``g_i (x) M`` with ``M`` complex Gaussian and ``i`` drawn from
        ``1..n-1`` unless ``mode_index`` is given.
    lipschitz
        Hermitian blocks rescaled so that the largest operator-norm jump
        ``||f(x) - f(y)||`` across a rate-graph edge equals ``lipschitz``.

    The output depends only on the arguments; ``seed`` may be anything
    accepted by :func:`numpy.random.default_rng`.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if kind not in FUNCTION_KINDS:
        raise ValueError(f"unknown function kind {kind!r}; expected one of {FUNCTION_KINDS}")
    rng = np.random.default_rng(seed)
    n = chain.n
    if kind == "hermitian":
        return MatrixFunction(_gaussian_hermitian(rng, (n, d, d)), hermitian=True)
    if kind == "general":
        return MatrixFunction(_gaussian_general(rng, (n, d, d)))
    if kind == "eigenmode":
        spec = spec or eigendecompose(chain)
        i = int(rng.integers(1, n)) if mode_index is None else mode_index
        M = _gaussian_general(rng, (d, d))
        return equality_tensor(spec, i, M)
    h = _gaussian_hermitian(rng, (n, d, d))
    x, y = chain.edges()
    jumps = np.linalg.norm(h[x] - h[y], ord=2, axis=(1, 2))
    return MatrixFunction(h * (lipschitz / jumps.max()), hermitian=True)


def equality_tensor(spec: SpectralDecomposition, mode_index: int, M) -> MatrixFunction:
    """``g_i (x) M`` for ``1 <= i <= n-1``."""
    if not 1 <= mode_index <= spec.n - 1:
        raise IndexError(f"mode index {mode_index} outside 1..{spec.n - 1}")
    return MatrixFunction.tensor(spec.eigenfunctions[mode_index], M)
