"""Deviation tails of matrix-valued functions under the stationary measure.

The tail ``P(||f(X) - E f||_op >= t)`` is computed exactly by summing
``mu`` over states. It is compared with a second-moment bound that
follows from the matrix Poincare inequality::

    E ||f - E f||_op^2 <= tr Var_d(f) <= alpha * tr E_d(f, f)

so ``P(||f - E f||_op >= t) <= alpha * tr E_d(f, f) / t**2`` (clamped at 1).
A continuous-time path sampler is included for ergodic-average
illustrations.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .markov_core import ReversibleGenerator
from .matrix_function import MatrixFunction, matrix_dirichlet, matrix_mean
from .spectral import poincare_constant


def _blocks(f) -> np.ndarray:
    return f.blocks if isinstance(f, MatrixFunction) else MatrixFunction(f).blocks


def _thresholds(thresholds, positive: bool) -> np.ndarray:
    t = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if t.ndim != 1:
        raise ValueError("thresholds must be a 1-d sequence")
    if np.any(np.diff(t) < 0):
        raise ValueError("thresholds must be ascending")
    if np.any(t < 0) or (positive and np.any(t <= 0)):
        raise ValueError("thresholds must be positive")
    return t


def deviations(chain: ReversibleGenerator, f) -> np.ndarray:
    """Operator-norm deviation ``||f(x) - E f||`` at every state."""
    fb = _blocks(f)
    if fb.shape[0] != chain.n:
        raise ValueError(f"function has {fb.shape[0]} states, chain has {chain.n}")
    c = fb - matrix_mean(fb, chain.mu)[None]
    return np.linalg.norm(c, ord=2, axis=(1, 2))


def exact_tail(chain: ReversibleGenerator, f, thresholds) -> np.ndarray:
    """``P_mu(||f(X) - E f||_op >= t)`` for each ``t``."""
    t = _thresholds(thresholds, positive=False)
    dev = deviations(chain, f)
    return np.array([chain.mu[dev >= tk].sum() for tk in t])


def chebyshev_bound(chain: ReversibleGenerator, f, thresholds, alpha: float | None = None) -> np.ndarray:
    """``min(1, alpha * tr E_d(f, f) / t**2)`` for each ``t``.

    Raises ``ValueError`` if ``alpha`` is below the tightest Poincare
    constant, since the bound would then be unjustified.
    """
    t = _thresholds(thresholds, positive=True)
    tight = poincare_constant(chain)
    a = tight if alpha is None else float(alpha)
    if a < tight * (1.0 - 1e-12):
        raise ValueError(f"alpha={a!r} is below the Poincare constant {tight!r}")
    energy = float(np.trace(matrix_dirichlet(chain, f)).real)
    return np.minimum(1.0, a * max(energy, 0.0) / t**2)


@dataclass(frozen=True, eq=False)
class TailReport:
    thresholds: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    chain_id: str = ""
    function_id: str = ""

    @property
    def sound(self) -> bool:
        return bool(np.all(self.empirical <= np.minimum(1.0, self.bound) + 1e-12))

    def to_dict(self) -> dict:
        return {
            "chain_id": self.chain_id,
            "function_id": self.function_id,
            "thresholds": self.thresholds.tolist(),
            "empirical": self.empirical.tolist(),
            "bound": self.bound.tolist(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "empirical", "bound"])
        for row in zip(self.thresholds, self.empirical, self.bound):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def tail_report(chain: ReversibleGenerator, f, thresholds, alpha: float | None = None,
                chain_id: str = "", function_id: str = "") -> TailReport:
    t = _thresholds(thresholds, positive=True)
    return TailReport(thresholds=t, empirical=exact_tail(chain, f, t),
                      bound=chebyshev_bound(chain, f, t, alpha),
                      chain_id=chain_id, function_id=function_id)


# -- trajectories ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-constant path: ``states[k]`` occupied on ``[times[k], times[k+1])``.

    The last state is occupied until ``horizon``.
    """

    times: np.ndarray
    states: np.ndarray
    horizon: float

    def __len__(self):
        return self.states.size

    def __iter__(self):
        return iter(zip(self.times.tolist(), self.states.tolist()))

    def holding_times(self) -> np.ndarray:
        return np.diff(np.append(self.times, self.horizon))


def sample_trajectory(chain: ReversibleGenerator, horizon: float, seed=0,
                      initial_state: int | None = None) -> Trajectory:
    """Exact continuous-time simulation up to ``horizon``.

    Holding times at ``x`` are exponential with rate ``-L(x, x)`` and the
    next state is drawn proportionally to ``L(x, y)``. Without
    ``initial_state`` the start is drawn from the stationary measure.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    rng = np.random.default_rng(seed)
    L = chain.rates
    n = chain.n
    exit_rates = -np.diag(L)
    jump_cdf = np.where(np.eye(n, dtype=bool), 0.0, L) / exit_rates[:, None]
    jump_cdf = np.cumsum(jump_cdf, axis=1)
    jump_cdf[:, -1] = 1.0

    x = int(rng.choice(n, p=chain.mu)) if initial_state is None else int(initial_state)
    if not 0 <= x < n:
        raise ValueError(f"initial state {x} outside 0..{n - 1}")
    times, states = [0.0], [x]
    t = 0.0
    while True:
        t += rng.exponential(1.0 / exit_rates[x])
        if t >= horizon:
            break
        x = int(np.searchsorted(jump_cdf[x], rng.random(), side="right"))
        times.append(t)
        states.append(x)
    return Trajectory(np.array(times), np.array(states, dtype=int), float(horizon))


def ergodic_average(path: Trajectory, f) -> np.ndarray:
    """Time average of ``f`` along ``path``; ``f`` at the start if the path has zero length."""
    fb = _blocks(f)
    if len(path) == 0:
        raise ValueError("empty path")
    if path.horizon == 0:
        return fb[path.states[0]].copy()
    w = path.holding_times() / path.horizon
    return np.einsum("k,kij->ij", w, fb[path.states])
