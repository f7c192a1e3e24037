"""Cheap bootstrap for estimates carrying both data noise and computation noise.

The point estimate averages ``R0`` noisy runs on the data; each of the ``B``
resample estimates averages ``R`` runs on a resample. Two intervals are
provided, both centered at the point estimate:

* ``interval_centered_original`` (I_O): spread centered at the point estimate,
  critical value ``q_O`` from a Monte Carlo worst case over the nuisance
  ratio ``theta``;
* ``interval_centered_mean`` (I_M): textbook sample spread of the resample
  estimates with ``q_M = max(1/rho, 1) * t_{B-1,1-alpha/2}``.

``rho = sqrt(R0 / R)`` throughout.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cheap import Interval, ResampleSummary, check_alpha
from .distributions import t_quantile
from .errors import DomainError, InsufficientResamples

log = logging.getLogger(__name__)

__all__ = [
    "NestedEstimate",
    "PivotParams",
    "ThetaGrid",
    "PivotDraws",
    "nested_point_estimate",
    "draw_pivot_block",
    "pivot_values",
    "sample_pivot",
    "qO_profile",
    "solve_qO",
    "q_M",
    "interval_centered_original",
    "interval_centered_mean",
]


def nested_point_estimate(runs):
    runs = np.asarray(runs, dtype=float)
    if runs.size == 0:
        raise DomainError("at least one run is required")
    return float(runs.mean())


@dataclass(frozen=True)
class NestedEstimate:
    point_estimate: float
    R0: int
    R: int
    resample_estimates: np.ndarray

    def __post_init__(self):
        if self.R0 < 1 or self.R < 1:
            raise DomainError(f"R0 and R must be positive, got {self.R0}, {self.R}")
        object.__setattr__(self, "resample_estimates", np.asarray(self.resample_estimates, dtype=float))

    @property
    def rho(self):
        return math.sqrt(self.R0 / self.R)

    @property
    def B(self):
        return len(self.resample_estimates)

    def head(self, B):
        return NestedEstimate(self.point_estimate, self.R0, self.R, self.resample_estimates[:B])

    def summary(self):
        """View as an ordinary :class:`ResampleSummary` (for the basic/percentile baselines)."""
        return ResampleSummary(self.point_estimate, self.resample_estimates)


@dataclass(frozen=True)
class PivotParams:
    theta: float
    rho: float
    B: int

    def __post_init__(self):
        if self.theta < 0 or not self.rho > 0 or self.B < 1:
            raise DomainError(f"invalid pivot parameters {self}")


@dataclass(frozen=True)
class ThetaGrid:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0 or np.any(v < 0) or np.any(np.diff(v) <= 0):
            raise DomainError("theta grid must be a nonempty, strictly ascending, nonnegative sequence")
        object.__setattr__(self, "values", v)

    @classmethod
    def paper(cls):
        """0.01, 0.02, ..., 100."""
        return cls(np.arange(1, 10_001) / 100.0)

    @classmethod
    def fast(cls, points=200):
        """Log-spaced grid from 1e-2 to 1e2."""
        return cls(np.logspace(-2, 2, points))

    @classmethod
    def named(cls, name):
        if name == "paper":
            return cls.paper()
        if name == "fast":
            return cls.fast()
        raise DomainError(f"unknown theta grid {name!r}; expected 'fast' or 'paper'")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class PivotDraws:
    """A block of ``(V1, V2, V3, Y)`` draws shared by every theta."""

    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray
    Y: np.ndarray
    B: int

    @property
    def N(self):
        return len(self.V1)


def draw_pivot_block(N, B, stream):
    """``N`` independent ``(V1, V2, V3, Y)`` with ``Y ~ chi2_{B-1}`` (``Y = 0`` when ``B = 1``)."""
    if B < 1 or N < 1:
        raise DomainError(f"need B >= 1 and N >= 1, got B={B}, N={N}")
    v = stream.normals((3, N))
    Y = stream.chi2(B - 1, N)
    return PivotDraws(v[0], v[1], v[2], Y, B)


def pivot_values(draws, theta, rho):
    """Limiting pivot ``(theta V1 + V2) / sqrt(a^2 Y + (a V3 - V2)^2)``, ``a = sqrt((theta^2 + rho^2)/B)``.

    ``theta`` may be a scalar or a 1-d array, giving shape ``(N,)`` or
    ``(len(theta), N)``. The denominator is evaluated in completed-square form,
    which cannot go negative.
    """
    theta = np.asarray(theta, dtype=float)
    t = theta[..., None] if theta.ndim else theta
    a = np.sqrt((t * t + rho * rho) / draws.B)
    radicand = a * a * draws.Y + np.square(a * draws.V3 - draws.V2)
    zeros = int(np.count_nonzero(radicand == 0))
    if zeros:
        log.warning("pivot denominator exactly zero in %d draws", zeros)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (t * draws.V1 + draws.V2) / np.sqrt(radicand)


def sample_pivot(params, stream, max_redraws=100):
    """One draw of the limiting pivot; an exactly zero denominator is redrawn."""
    for attempt in range(max_redraws):
        draws = draw_pivot_block(1, params.B, stream)
        a = math.sqrt((params.theta**2 + params.rho**2) / params.B)
        radicand = a * a * draws.Y[0] + (a * draws.V3[0] - draws.V2[0]) ** 2
        if radicand > 0:
            if attempt:
                log.warning("redrew %d pivot draws with zero denominator", attempt)
            return float((params.theta * draws.V1[0] + draws.V2[0]) / math.sqrt(radicand))
    raise ArithmeticError("pivot denominator repeatedly zero")


def _order_rank(level, N):
    # smallest k with k / N >= level, as a 0-based index
    return min(max(math.ceil(level * N - 1e-9), 1), N) - 1


def qO_profile(draws, alpha, rho, grid, threads=1, chunk=32):
    """Empirical ``(1 - alpha/2)``-quantile of the pivot at every theta in ``grid``."""
    k = _order_rank(1 - alpha / 2, draws.N)
    thetas = grid.values
    chunks = [thetas[i:i + chunk] for i in range(0, len(thetas), chunk)]

    def work(block):
        vals = pivot_values(draws, block, rho)
        # copy: a column view would keep the whole partitioned block alive
        return np.partition(vals, k, axis=1)[:, k].copy()

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return np.concatenate(parts)


def _paper_grid_search(draws, alpha, rho, grid, B, step=0.01, chunk=32, max_steps=100_000):
    """Raise ``q`` from ``t_{B,1-alpha/2} - 0.5`` in steps of ``step`` until the
    smallest empirical CDF over the theta grid reaches ``1 - alpha/2``."""
    level = 1 - alpha / 2
    need = math.ceil(level * draws.N - 1e-9)
    q = t_quantile(B, level) - 0.5
    thetas = grid.values
    # the theta that failed last is re-checked first, from a sorted copy
    failing = 0
    failing_row = np.sort(pivot_values(draws, thetas[0], rho))
    for _ in range(max_steps):
        if np.searchsorted(failing_row, q, side="right") >= need:
            for start in range(0, len(thetas), chunk):
                counts = np.count_nonzero(pivot_values(draws, thetas[start:start + chunk], rho) <= q, axis=1)
                short = np.flatnonzero(counts < need)
                if short.size:
                    failing = start + int(short[0])
                    failing_row = np.sort(pivot_values(draws, thetas[failing], rho))
                    break
            else:
                return q
        q = round(q + step, 10)
    raise ArithmeticError("paper grid search did not terminate")


def solve_qO(B, alpha, rho, grid, N, stream, method="sup", threads=1):
    """Monte Carlo critical value ``q_O`` for the interval centered at the original estimate.

    Parameters
    ----------
    B : int
        Number of resamples.
    alpha : float
        Two-sided level; the returned value targets ``1 - alpha/2``.
    rho : float
        ``sqrt(R0 / R)``.
    grid : ThetaGrid
        Nuisance values searched over.
    N : int
        Monte Carlo draws, shared by every theta.
    stream : RandomStream
    method : {"sup", "paper-grid"}
        ``"sup"`` returns the largest per-theta empirical quantile.
        ``"paper-grid"`` runs the literal upward search in steps of 0.01
        from ``t_{B,1-alpha/2} - 0.5``; on the same draws it returns the
        smallest grid point not below the ``"sup"`` answer.
    threads : int
        Worker threads over theta chunks; the answer does not depend on it.
    """
    alpha = check_alpha(alpha)
    if B < 1:
        raise InsufficientResamples("q_O", B, 1)
    if N < 10_000:
        raise DomainError(f"N must be at least 10^4, got {N}")
    if not rho > 0:
        raise DomainError(f"rho must be positive, got {rho}")
    draws = draw_pivot_block(N, B, stream)
    if method == "sup":
        return float(qO_profile(draws, alpha, rho, grid, threads).max())
    if method == "paper-grid":
        return float(_paper_grid_search(draws, alpha, rho, grid, B))
    raise DomainError(f"unknown q_O method {method!r}")


def q_M(B, alpha, rho):
    if B < 2:
        raise InsufficientResamples("centered-mean", B, 2)
    return max(1.0 / rho, 1.0) * t_quantile(B - 1, 1 - check_alpha(alpha) / 2)


def interval_centered_original(est, alpha, qO):
    """``point -/+ qO * S_O`` with ``S_O^2 = (1/B) sum (psi**_b - point)^2``."""
    alpha = check_alpha(alpha)
    if est.B < 1:
        raise InsufficientResamples("centered-original", est.B, 1)
    if not qO > 0:
        raise DomainError(f"q_O must be positive, got {qO}")
    dev = est.resample_estimates - est.point_estimate
    half = qO * math.sqrt(float(dev @ dev) / est.B)
    lo, hi = est.point_estimate - half, est.point_estimate + half
    return Interval(lo, hi, 1 - alpha, est.B, "centered-original", degenerate=lo == hi)


def interval_centered_mean(est, alpha):
    """``point -/+ q_M * S_M`` with ``S_M`` the sample sd (``B - 1`` denominator) of the resample estimates.

    The spread is centered at the resample mean but the interval itself is
    centered at the point estimate.
    """
    alpha = check_alpha(alpha)
    q = q_M(est.B, alpha, est.rho)
    half = q * float(np.std(est.resample_estimates, ddof=1))
    lo, hi = est.point_estimate - half, est.point_estimate + half
    return Interval(lo, hi, 1 - alpha, est.B, "centered-mean", degenerate=lo == hi)
