"""Finite reversible Markov generators and their stationary measures.

A generator is an ``n x n`` real rate matrix ``L`` with nonnegative
off-diagonal entries and zero row sums. Every generator built here is
validated for irreducibility and detailed balance with respect to its
stationary measure before it is handed out, so downstream code can rely
on ``-L`` being self-adjoint in the ``mu``-weighted inner product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

#: Default upper bound on the number of states (dense eigensolves are O(n^3)).
STATE_CAP = 4096

ROW_SUM_TOL = 1e-12
STATIONARITY_TOL = 1e-10
BALANCE_TOL = 1e-10
BALANCE_FLOOR = 1e-14
MEASURE_SUM_TOL = 1e-12
MEASURE_FLOOR = 1e-14


class ChainError(ValueError):
    """Base class for invalid chain inputs."""


class NotAGenerator(ChainError):
    """Rate matrix has negative off-diagonal rates or nonzero row sums."""


class Reducible(ChainError):
    """Rate graph is not strongly connected."""


class NotReversible(ChainError):
    """Detailed balance fails beyond tolerance."""


class StateCapExceeded(ChainError):
    """Requested state space is larger than the configured cap."""


@dataclass(frozen=True, eq=False)
class StationaryMeasure:
    """Strictly positive probability vector over ``{0, ..., n-1}``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ChainError("measure must be a nonempty 1-d vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ChainError("measure entries must be strictly positive")
        if abs(w.sum() - 1.0) > MEASURE_SUM_TOL:
            raise ChainError(f"measure sums to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        return self.weights if dtype is None else self.weights.astype(dtype)


@dataclass(frozen=True, eq=False)
class ReversibleGenerator:
    """Validated rate matrix together with its stationary measure.

    Construct through :func:`new_generator` or one of the ``build_*``
    helpers; the constructor itself performs no validation.
    """

    rates: np.ndarray
    measure: StationaryMeasure

    @property
    def n(self) -> int:
        return self.rates.shape[0]

    @property
    def mu(self) -> np.ndarray:
        return self.measure.weights

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Ordered pairs ``(x, y)``, ``x != y``, with ``L(x, y) > 0``."""
        off = self.rates.copy()
        np.fill_diagonal(off, 0.0)
        return np.nonzero(off > 0)


@dataclass(frozen=True)
class BalanceReport:
    max_violation: float
    ok: bool


def check_detailed_balance(rates, mu, tol: float = BALANCE_TOL) -> BalanceReport:
    """Largest relative violation of ``mu(x) L(x,y) = mu(y) L(y,x)``.

    Each pair is normalized by the larger of its two flow terms, with an
    absolute floor of ``1e-14`` so that pairs with no flow count as zero.
    """
    L = np.asarray(rates, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1] or L.shape[0] != mu.size:
        raise ValueError(f"shape mismatch: rates {L.shape}, measure {mu.shape}")
    flow = mu[:, None] * L
    back = flow.T
    scale = np.maximum(np.maximum(np.abs(flow), np.abs(back)), BALANCE_FLOOR)
    viol = np.abs(flow - back) / scale
    np.fill_diagonal(viol, 0.0)
    worst = float(viol.max()) if viol.size else 0.0
    return BalanceReport(max_violation=worst, ok=worst <= tol)


def _check_rate_matrix(L: np.ndarray) -> None:
    off = L.copy()
    np.fill_diagonal(off, 0.0)
    if np.any(off < 0):
        raise NotAGenerator("off-diagonal rates must be nonnegative")
    row_scale = np.abs(L).max(axis=1)
    row_sums = np.abs(L.sum(axis=1))
    bad = row_sums > ROW_SUM_TOL * np.maximum(row_scale, 1e-300)
    # an all-zero row sums exactly to zero
    bad &= row_sums > 0
    if np.any(bad):
        x = int(np.argmax(bad))
        raise NotAGenerator(f"row {x} sums to {L[x].sum()!r}")


def _is_irreducible(L: np.ndarray) -> bool:
    adj = L > 0
    np.fill_diagonal(adj, False)
    ncomp, _ = connected_components(adj, directed=True, connection="strong")
    return ncomp == 1


def _solve_stationary(L: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(L.T)
    k = int(np.argmin(np.abs(vals)))
    v = np.real(vecs[:, k])
    v = v * np.sign(v[np.argmax(np.abs(v))])
    return v / v.sum()


def _tree_measure(L: np.ndarray) -> np.ndarray:
    # detailed-balance ratios along a BFS tree; accurate entrywise when L is reversible
    n = L.shape[0]
    log_mu = np.full(n, np.nan)
    log_mu[0] = 0.0
    queue = [0]
    while queue:
        x = queue.pop(0)
        for y in np.nonzero((L[x] > 0) & (L[:, x] > 0))[0]:
            if y != x and np.isnan(log_mu[y]):
                log_mu[y] = log_mu[x] + np.log(L[x, y]) - np.log(L[y, x])
                queue.append(y)
    if np.any(np.isnan(log_mu)):
        raise NotReversible("rate graph has one-way edges")
    mu = np.exp(log_mu - log_mu.max())
    return mu / mu.sum()


def new_generator(rates, measure=None, *, max_states: int | None = None) -> ReversibleGenerator:
    """Validate a rate matrix and attach its stationary measure.

    Parameters
    ----------
    rates : array_like, shape (n, n)
        Real rate matrix, ``n >= 2``.
    measure : array_like, optional
        Stationary measure to use instead of solving ``mu^T L = 0``.
        It is checked for stationarity and detailed balance like a
        computed one.
    max_states : int, optional
        State cap; defaults to :data:`STATE_CAP`.

    Raises
    ------
    NotAGenerator, Reducible, NotReversible, StateCapExceeded
    """
    L = np.array(rates)
    if np.iscomplexobj(L):
        raise NotAGenerator("rates must be real")
    L = L.astype(float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise NotAGenerator(f"rate matrix must be square, got shape {L.shape}")
    n = L.shape[0]
    if n < 2:
        raise NotAGenerator("need at least two states")
    cap = STATE_CAP if max_states is None else max_states
    if n > cap:
        raise StateCapExceeded(f"{n} states exceeds cap {cap}")
    if not np.all(np.isfinite(L)):
        raise NotAGenerator("rates must be finite")
    _check_rate_matrix(L)
    if not _is_irreducible(L):
        raise Reducible("rate graph is not strongly connected")

    if measure is None:
        mu = _solve_stationary(L)
        if np.any(mu <= MEASURE_FLOOR) or not check_detailed_balance(L, mu).ok:
            # eigensolve is only absolutely accurate; retry with the ratio-based measure
            try:
                mu = _tree_measure(L)
            except NotReversible:
                pass
    else:
        mu = np.asarray(measure, dtype=float)
    if mu.shape != (n,):
        raise ChainError(f"measure has shape {mu.shape}, expected ({n},)")
    if np.any(mu <= MEASURE_FLOOR):
        raise ChainError(f"stationary measure has entries <= {MEASURE_FLOOR}")
    stat = np.abs(mu @ L)
    if stat.max() > STATIONARITY_TOL:
        raise NotReversible(f"mu^T L = 0 violated by {stat.max():.3e}")
    report = check_detailed_balance(L, mu)
    if not report.ok:
        raise NotReversible(f"detailed balance violated by {report.max_violation:.3e}")

    L.setflags(write=False)
    return ReversibleGenerator(rates=L, measure=StationaryMeasure(mu))


def from_kernel(P, **kwargs) -> ReversibleGenerator:
    """Continuous-time generator ``L = P - I`` of a discrete kernel ``P``."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise NotAGenerator(f"kernel must be square, got shape {P.shape}")
    if np.any(P < 0):
        raise NotAGenerator("kernel entries must be nonnegative")
    if np.any(np.abs(P.sum(axis=1) - 1.0) > ROW_SUM_TOL * P.shape[0]):
        raise NotAGenerator("kernel rows must sum to 1")
    return new_generator(P - np.eye(P.shape[0]), **kwargs)


# -- builder catalog ---------------------------------------------------------


def build_complete_graph(n: int) -> ReversibleGenerator:
    """Unit-rate jumps between every pair of distinct states."""
    if n < 2:
        raise ChainError("complete graph needs n >= 2")
    L = np.ones((n, n)) - n * np.eye(n)
    return new_generator(L, np.full(n, 1.0 / n))


def build_hypercube(m: int, *, max_states: int | None = None) -> ReversibleGenerator:
    """Walk on ``{0,1}^m`` flipping each coordinate at rate 1.

    State ``x`` is the integer whose binary digits are the coordinates.
    """
    if not 1 <= m <= 20:
        raise ChainError(f"hypercube dimension must be in [1, 20], got {m}")
    n = 2**m
    cap = STATE_CAP if max_states is None else max_states
    if n > cap:
        raise StateCapExceeded(f"hypercube m={m} has {n} states, cap is {cap}")
    L = np.zeros((n, n))
    states = np.arange(n)
    for bit in range(m):
        L[states, states ^ (1 << bit)] = 1.0
    L[states, states] = -m
    return new_generator(L, np.full(n, 1.0 / n), max_states=cap)


def build_birth_death(up, down) -> ReversibleGenerator:
    """Tridiagonal chain on ``{0, ..., n-1}``.

    ``up[k]`` is the rate ``k -> k+1`` and ``down[k]`` the rate
    ``k+1 -> k``; the measure is ``mu(k) ~ prod_{j<k} up[j] / down[j]``.
    """
    up = np.atleast_1d(np.asarray(up, dtype=float))
    down = np.atleast_1d(np.asarray(down, dtype=float))
    if up.ndim != 1 or up.shape != down.shape or up.size == 0:
        raise ChainError("up and down must be 1-d vectors of equal length n-1 >= 1")
    if np.any(up <= 0) or np.any(down <= 0):
        raise ChainError("birth-death rates must be positive")
    n = up.size + 1
    L = np.zeros((n, n))
    k = np.arange(n - 1)
    L[k, k + 1] = up
    L[k + 1, k] = down
    L[np.arange(n), np.arange(n)] = -L.sum(axis=1)
    log_mu = np.concatenate([[0.0], np.cumsum(np.log(up) - np.log(down))])
    mu = np.exp(log_mu - log_mu.max())
    return new_generator(L, mu / mu.sum())


def build_two_state(a: float, b: float) -> ReversibleGenerator:
    """Two-state chain with rate ``a`` for ``0 -> 1`` and ``b`` for ``1 -> 0``."""
    return build_birth_death([a], [b])


def build_product(first: ReversibleGenerator, second: ReversibleGenerator,
                  *, max_states: int | None = None) -> ReversibleGenerator:
    """Independent product chain, generator ``L1 (x) I + I (x) L2``.

    State ``(x1, x2)`` has index ``x1 * n2 + x2``.
    """
    n = first.n * second.n
    cap = STATE_CAP if max_states is None else max_states
    if n > cap:
        raise StateCapExceeded(f"product has {n} states, cap is {cap}")
    L = np.kron(first.rates, np.eye(second.n)) + np.kron(np.eye(first.n), second.rates)
    mu = np.kron(first.mu, second.mu)
    return new_generator(L, mu, max_states=cap)


def metropolis_kernel(target, proposal) -> np.ndarray:
    """Discrete Metropolis kernel for ``target`` from a symmetric proposal."""
    mu = np.asarray(target, dtype=float)
    Q = np.asarray(proposal, dtype=float)
    n = mu.size
    if Q.shape != (n, n):
        raise ChainError(f"proposal shape {Q.shape} does not match target size {n}")
    if not np.allclose(Q, Q.T, rtol=0, atol=1e-14):
        raise ChainError("proposal must be symmetric")
    if np.any(Q < 0) or np.any(np.abs(Q.sum(axis=1) - 1.0) > 1e-12):
        raise ChainError("proposal must be a stochastic matrix")
    if np.any(mu <= 0):
        raise ChainError("target must be strictly positive")
    accept = np.minimum(1.0, mu[None, :] / mu[:, None])
    P = Q * accept
    np.fill_diagonal(P, 0.0)
    P[np.arange(n), np.arange(n)] = 1.0 - P.sum(axis=1)
    return P


def build_metropolis(target, proposal) -> ReversibleGenerator:
    """Metropolis chain reversible with respect to ``target``."""
    mu = target.weights if isinstance(target, StationaryMeasure) else np.asarray(target, float)
    mu = StationaryMeasure(mu).weights
    return from_kernel(metropolis_kernel(mu, proposal), measure=mu)


# -- chain files -------------------------------------------------------------


BUILDERS = {
    "complete": lambda p: build_complete_graph(int(p["n"])),
    "hypercube": lambda p: build_hypercube(int(p["m"])),
    "birth_death": lambda p: build_birth_death(p["up"], p["down"]),
    "two_state": lambda p: build_two_state(float(p["a"]), float(p["b"])),
    "product": lambda p: build_product(chain_from_dict(p["left"]), chain_from_dict(p["right"])),
    "metropolis": lambda p: build_metropolis(p["target"], p["proposal"]),
}


def chain_to_dict(chain: ReversibleGenerator) -> dict:
    return {
        "kind": "generator",
        "n": chain.n,
        "matrix": chain.rates.tolist(),
        "measure": chain.mu.tolist(),
    }


def chain_from_dict(data: dict) -> ReversibleGenerator:
    """Load a chain from its JSON-like description.

    Accepts ``{"kind": "generator" | "kernel", "n", "matrix", "measure"?}``
    and ``{"kind": "builder", "name", "params"}``.
    """
    try:
        kind = data["kind"]
        if kind == "builder":
            name = data["name"]
            if name not in BUILDERS:
                raise ChainError(f"unknown builder {name!r}; known: {sorted(BUILDERS)}")
            return BUILDERS[name](data.get("params", {}))
        if kind not in ("generator", "kernel"):
            raise ChainError(f"unknown chain kind {kind!r}")
        matrix = np.asarray(data["matrix"], dtype=float)
        if "n" in data and matrix.shape[:1] != (int(data["n"]),):
            raise ChainError(f"declared n={data['n']} does not match matrix shape {matrix.shape}")
        measure = data.get("measure")
        if kind == "kernel":
            return from_kernel(matrix, measure=measure)
        return new_generator(matrix, measure)
    except (KeyError, TypeError) as exc:
        raise ChainError(f"malformed chain description: {exc!r}") from exc
