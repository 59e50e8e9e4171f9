"""Loewner-order certificates for the matrix Poincare inequality.

:func:`certify_matrix_poincare` checks ``alpha * E_d(f, f) >= Var_d(f)``
in the positive semidefinite order, and :func:`fuzz` runs it over
deterministic random (chain, function) pairs. Equality cases (functions
living on the bottom eigenspace) are reported as ``Marginal`` rather
than folded into ``Holds``.
"""

from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import markov_core as mc
from .markov_core import ReversibleGenerator
from .matrix_function import (
    FUNCTION_KINDS,
    MatrixFunction,
    dirichlet_via_modes,
    equality_tensor,
    matrix_dirichlet,
    matrix_dirichlet_edge,
    matrix_dirichlet_operator,
    matrix_variance,
    mode_decompose,
    random_matrix_function,
)
from .spectral import SpectralDecomposition, eigendecompose, verify_scalar_poincare

DEFAULT_TOL = 1e-8
HERMITIAN_GUARD = 1e-8

CHAIN_KINDS = ("complete", "hypercube", "birth_death", "product", "kernel", "metropolis")


class Verdict(str, enum.Enum):
    HOLDS = "Holds"
    MARGINAL = "Marginal"
    FAILS = "Fails"


@dataclass(frozen=True)
class LoewnerCertificate:
    """Outcome of comparing ``A`` and ``B`` in the Loewner order."""

    difference_min_eigenvalue: float
    hermiticity_residual: float
    tolerance: float
    scale: float
    verdict: Verdict

    @property
    def threshold(self) -> float:
        return self.tolerance * max(self.scale, 1.0)

    @property
    def normalized_slack(self) -> float:
        return self.difference_min_eigenvalue / max(self.scale, 1.0)

    @property
    def holds(self) -> bool:
        return self.verdict is not Verdict.FAILS

    def to_dict(self) -> dict:
        return {
            "difference_min_eigenvalue": self.difference_min_eigenvalue,
            "hermiticity_residual": self.hermiticity_residual,
            "tolerance": self.tolerance,
            "scale": self.scale,
            "verdict": self.verdict.value,
        }


def psd_compare(A, B, tol: float = DEFAULT_TOL) -> LoewnerCertificate:
    """Certificate for ``A >= B``.

    Both sides are Hermitized after checking that their anti-Hermitian
    parts are below ``1e-8`` of the scale (the larger of the two traces).
    ``Marginal`` means the smallest eigenvalue of ``A - B`` is within
    ``tol * max(scale, 1)`` of zero.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"need square matrices of equal shape, got {A.shape} and {B.shape}")
    scale = float(max(np.trace(A).real, np.trace(B).real))
    resid = float(max(np.abs(A - A.conj().T).max(), np.abs(B - B.conj().T).max()))
    if resid > HERMITIAN_GUARD * max(abs(scale), 1.0):
        raise ValueError(f"inputs are not Hermitian (residual {resid:.3e})")
    diff = 0.5 * (A + A.conj().T) - 0.5 * (B + B.conj().T)
    min_eig = float(np.linalg.eigvalsh(diff)[0])
    thr = tol * max(scale, 1.0)
    if abs(min_eig) < thr:
        verdict = Verdict.MARGINAL
    elif min_eig >= 0:
        verdict = Verdict.HOLDS
    else:
        verdict = Verdict.FAILS
    return LoewnerCertificate(min_eig, resid, tol, scale, verdict)


@dataclass(frozen=True, eq=False)
class PoincareReport:
    alpha_used: float
    dirichlet: np.ndarray
    variance: np.ndarray
    certificate: LoewnerCertificate
    mode_gap_witness: int | None
    tight_alpha: float

    @property
    def verdict(self) -> Verdict:
        return self.certificate.verdict

    @property
    def holds(self) -> bool:
        return self.certificate.holds

    @property
    def alpha_valid(self) -> bool:
        """Whether ``alpha_used`` is at least the tightest Poincare constant."""
        return self.alpha_used >= self.tight_alpha * (1.0 - 1e-12)

    @property
    def difference(self) -> np.ndarray:
        return self.alpha_used * self.dirichlet - self.variance

    def to_dict(self) -> dict:
        def cplx(A):
            return np.stack([A.real, A.imag], axis=-1).tolist()

        return {
            "alpha_used": self.alpha_used,
            "tight_alpha": self.tight_alpha,
            "alpha_valid": self.alpha_valid,
            "dirichlet": cplx(self.dirichlet),
            "variance": cplx(self.variance),
            "certificate": self.certificate.to_dict(),
            "mode_gap_witness": self.mode_gap_witness,
        }


def _as_matrix_function(f) -> MatrixFunction:
    return f if isinstance(f, MatrixFunction) else MatrixFunction(f)


def _gap_witness(f: MatrixFunction, spec: SpectralDecomposition) -> int | None:
    M = mode_decompose(f, spec).coefficients
    norms = np.linalg.norm(M.reshape(M.shape[0], -1), axis=1)
    if norms.size == 0 or norms.max() == 0:
        return None
    active = np.nonzero(norms > 1e-10 * norms.max())[0]
    lam = spec.eigenvalues[1:][active]
    return int(active[np.argmin(lam)] + 1)


def certify_matrix_poincare(chain: ReversibleGenerator, f, alpha: float | None = None,
                            tol: float = DEFAULT_TOL,
                            spec: SpectralDecomposition | None = None) -> PoincareReport:
    """Certify ``alpha * E_d(f, f) >= Var_d(f)``.

    ``alpha`` defaults to ``1 / gap``. Any ``alpha`` at least that large
    must give ``Holds`` or ``Marginal``; smaller values are accepted so
    that negative controls can be run, and may fail.
    """
    if alpha is not None and not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    f = _as_matrix_function(f)
    spec = spec or eigendecompose(chain)
    a = spec.poincare_constant if alpha is None else float(alpha)
    E = matrix_dirichlet(chain, f)
    V = matrix_variance(f, chain.mu)
    cert = psd_compare(a * E, V, tol)
    return PoincareReport(alpha_used=a, dirichlet=E, variance=V, certificate=cert,
                          mode_gap_witness=_gap_witness(f, spec),
                          tight_alpha=spec.poincare_constant)


def certify_scalar_reduction(chain: ReversibleGenerator, f, alpha: float | None = None,
                             tol: float = DEFAULT_TOL) -> PoincareReport:
    """Scalar Poincare check run through the ``d = 1`` matrix pipeline."""
    return certify_matrix_poincare(chain, MatrixFunction.from_scalar(f), alpha, tol)


def scalar_agreement(chain: ReversibleGenerator, f, alpha: float | None = None) -> float:
    """Gap between the matrix and scalar routes for the same ``f``."""
    spec = eigendecompose(chain)
    a = spec.poincare_constant if alpha is None else alpha
    mat = certify_matrix_poincare(chain, MatrixFunction.from_scalar(f), a, spec=spec)
    sca = verify_scalar_poincare(chain, f, a)
    return abs(mat.certificate.difference_min_eigenvalue - sca.slack)


def equality_witness(spec: SpectralDecomposition, d: int, mode_index: int, M=None) -> MatrixFunction:
    """``g_i (x) M``; at ``alpha = 1/gap`` this is an equality case when ``lambda_i = gap``."""
    M = np.eye(d) if M is None else np.asarray(M, dtype=complex)
    if M.shape != (d, d):
        raise ValueError(f"M has shape {M.shape}, expected ({d}, {d})")
    return equality_tensor(spec, mode_index, M)


# -- fuzzing -----------------------------------------------------------------


@dataclass(frozen=True)
class FuzzConfig:
    num_trials: int = 1000
    n_range: tuple[int, int] = (2, 12)
    d_range: tuple[int, int] = (1, 4)
    chain_kinds: tuple[str, ...] = CHAIN_KINDS
    function_kinds: tuple[str, ...] = FUNCTION_KINDS
    seed: int = 0
    alpha_factor: float = 1.0
    tol: float = DEFAULT_TOL
    jobs: int = 1

    def __post_init__(self):
        lo, hi = self.n_range
        if not 2 <= lo <= hi:
            raise ValueError(f"bad n_range {self.n_range}")
        dlo, dhi = self.d_range
        if not 1 <= dlo <= dhi:
            raise ValueError(f"bad d_range {self.d_range}")
        if not self.chain_kinds or not self.function_kinds:
            raise ValueError("chain_kinds and function_kinds must be nonempty")
        for k in self.chain_kinds:
            if k not in CHAIN_KINDS:
                raise ValueError(f"unknown chain kind {k!r}")
        for k in self.function_kinds:
            if k not in FUNCTION_KINDS:
                raise ValueError(f"unknown function kind {k!r}")
        if self.num_trials < 0 or self.alpha_factor <= 0:
            raise ValueError("num_trials must be >= 0 and alpha_factor > 0")
        if not any(_fits(k, self.n_range) for k in self.chain_kinds):
            raise ValueError(f"no chain kind in {self.chain_kinds} fits n_range {self.n_range}")


@dataclass(frozen=True)
class Trial:
    index: int
    seed: int
    chain_kind: str
    function_kind: str
    chain: ReversibleGenerator
    function: MatrixFunction


@dataclass
class FuzzSummary:
    trials: int
    failures: list = field(default_factory=list)
    worst_slack: float = float("inf")
    max_form_discrepancy: float = 0.0

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "failures": self.failures,
            "worst_slack": self.worst_slack,
            "max_form_discrepancy": self.max_form_discrepancy,
        }


def trial_seed(seed: int, index: int) -> int:
    """Per-trial seed, independent of evaluation order."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _random_rates(rng, size) -> np.ndarray:
    return np.exp(rng.uniform(np.log(0.2), np.log(5.0), size))


def _small_chain(rng, n: int) -> ReversibleGenerator:
    if n == 2 or rng.random() < 0.5:
        return mc.build_birth_death(_random_rates(rng, n - 1), _random_rates(rng, n - 1))
    return mc.build_complete_graph(n)


def random_chain(kind: str, n_range: tuple[int, int], rng) -> ReversibleGenerator:
    """Random chain of the given family with state count inside ``n_range``."""
    lo, hi = n_range
    if kind == "complete":
        return mc.build_complete_graph(int(rng.integers(lo, hi + 1)))
    if kind == "hypercube":
        ms = [m for m in range(1, 21) if lo <= 2**m <= hi]
        if not ms:
            raise ValueError(f"no hypercube size fits in {n_range}")
        return mc.build_hypercube(int(rng.choice(ms)))
    if kind == "birth_death":
        n = int(rng.integers(lo, hi + 1))
        return mc.build_birth_death(_random_rates(rng, n - 1), _random_rates(rng, n - 1))
    if kind == "product":
        pairs = [(a, b) for a in range(2, hi + 1) for b in range(2, hi + 1) if lo <= a * b <= hi]
        if not pairs:
            raise ValueError(f"no product size fits in {n_range}")
        a, b = pairs[int(rng.integers(len(pairs)))]
        return mc.build_product(_small_chain(rng, a), _small_chain(rng, b))
    n = int(rng.integers(lo, hi + 1))
    if kind == "kernel":
        # random walk on a weighted graph: symmetric conductances, a spanning path keeps it connected
        W = rng.uniform(0.0, 1.0, (n, n)) * (rng.random((n, n)) < 0.5)
        W[np.arange(n - 1), np.arange(1, n)] += rng.uniform(0.1, 1.0, n - 1)
        W = np.triu(W, 1)
        W = W + W.T + np.diag(rng.uniform(0.0, 1.0, n))
        P = W / W.sum(axis=1, keepdims=True)
        return mc.from_kernel(P)
    if kind == "metropolis":
        target = rng.dirichlet(np.ones(n)) + 1e-3
        target /= target.sum()
        Q = np.full((n, n), 1.0 / n)
        return mc.build_metropolis(target, Q)
    raise ValueError(f"unknown chain kind {kind!r}")


def generate_trial(config: FuzzConfig, index: int) -> Trial:
    s = trial_seed(config.seed, index)
    rng = np.random.default_rng(s)
    kinds = [k for k in config.chain_kinds if _fits(k, config.n_range)]
    ck = kinds[int(rng.integers(len(kinds)))]
    fk = config.function_kinds[int(rng.integers(len(config.function_kinds)))]
    chain = random_chain(ck, config.n_range, rng)
    d = int(rng.integers(config.d_range[0], config.d_range[1] + 1))
    f = random_matrix_function(chain, d, fk, seed=rng)
    return Trial(index=index, seed=s, chain_kind=ck, function_kind=fk, chain=chain, function=f)


def _fits(kind: str, n_range: tuple[int, int]) -> bool:
    lo, hi = n_range
    if kind == "hypercube":
        return any(lo <= 2**m <= hi for m in range(1, 21))
    if kind == "product":
        return hi >= 4 and any(lo <= a * b <= hi for a in range(2, hi + 1) for b in range(2, hi + 1))
    return True


def dirichlet_discrepancy(chain: ReversibleGenerator, f, spec: SpectralDecomposition) -> float:
    """Largest pairwise gap between operator, edge and mode Dirichlet forms,
    relative to the trace of the form (floored at machine tiny)."""
    op = matrix_dirichlet_operator(chain, f)
    edge = matrix_dirichlet_edge(chain, f)
    modes = dirichlet_via_modes(mode_decompose(f, spec), spec)
    scale = max(abs(np.trace(edge).real), np.finfo(float).tiny)
    gaps = [np.linalg.norm(op - edge, 2), np.linalg.norm(op - modes, 2), np.linalg.norm(edge - modes, 2)]
    return float(max(gaps) / scale)


def run_trial(config: FuzzConfig, index: int) -> dict:
    t = generate_trial(config, index)
    spec = eigendecompose(t.chain)
    alpha = config.alpha_factor * spec.poincare_constant
    report = certify_matrix_poincare(t.chain, t.function, alpha, config.tol, spec=spec)
    cert = report.certificate
    out = {
        "index": index,
        "normalized_slack": cert.normalized_slack,
        "discrepancy": dirichlet_discrepancy(t.chain, t.function, spec),
        "failure": None,
    }
    if cert.verdict is Verdict.FAILS:
        out["failure"] = {
            "chain": mc.chain_to_dict(t.chain),
            "function": t.function.to_dict(),
            "seed": t.seed,
            "min_eig": cert.difference_min_eigenvalue,
        }
    return out


def _run_trial_args(args):
    return run_trial(*args)


def fuzz(config: FuzzConfig = FuzzConfig()) -> FuzzSummary:
    """Certify ``config.num_trials`` random instances at ``alpha_factor / gap``.

    Trials are reduced in index order, so the summary does not depend on
    ``config.jobs``.
    """
    jobs = [(config, i) for i in range(config.num_trials)]
    if config.jobs > 1 and config.num_trials > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_trial_args, jobs, chunksize=32))
    else:
        results = [run_trial(*a) for a in jobs]
    summary = FuzzSummary(trials=config.num_trials)
    for r in results:
        summary.worst_slack = min(summary.worst_slack, r["normalized_slack"])
        summary.max_form_discrepancy = max(summary.max_form_discrepancy, r["discrepancy"])
        if r["failure"] is not None:
            summary.failures.append(r["failure"])
    if not results:
        summary.worst_slack = 0.0
    return summary
