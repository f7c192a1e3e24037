"""Cheap bootstrap intervals: two-sided, one-sided, standard-error and multivariate region.

Every constructor takes a :class:`ResampleSummary` (the original estimate and
``B`` resample estimates). The resample spread is always centered at the
original estimate and divided by ``B``, never ``B - 1``:

    S^2 = (1/B) * sum_b (psi*_b - psi_hat)^2

and the two-sided interval is ``psi_hat -/+ t_{B, 1-alpha/2} * S``.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .distributions import chi2_quantile, hotelling_t2_quantile, t_quantile
from .errors import DomainError, EstimatorError, InsufficientResamples, SingularScatter
from .rng import as_dataset, resample_with_replacement

__all__ = [
    "ResampleSummary",
    "Interval",
    "EllipsoidRegion",
    "check_alpha",
    "require_resamples",
    "centered_spread",
    "cheap_interval",
    "cheap_one_sided",
    "cheap_se_interval",
    "cheap_region",
    "region_contains",
    "evaluate",
    "resample_estimates",
    "run_cheap_bootstrap",
]


@dataclass(frozen=True)
class ResampleSummary:
    """Original estimate plus ``B`` resample estimates.

    ``resample_estimates`` has shape ``(B,)`` for scalar estimators and
    ``(B, d)`` for vector-valued ones. ``n`` is the data size, needed only
    by the standard-error interval.
    """

    psi_hat: object
    resample_estimates: np.ndarray
    n: int = None

    def __post_init__(self):
        est = np.asarray(self.resample_estimates, dtype=float)
        object.__setattr__(self, "resample_estimates", est)
        if np.ndim(self.psi_hat) == 0:
            object.__setattr__(self, "psi_hat", float(self.psi_hat))
            if est.ndim != 1:
                raise DomainError("scalar psi_hat needs a 1-d array of resample estimates")
        else:
            psi = np.asarray(self.psi_hat, dtype=float)
            object.__setattr__(self, "psi_hat", psi)
            if est.ndim != 2 or est.shape[1] != psi.shape[0]:
                raise DomainError("vector resample estimates must have shape (B, d)")

    @property
    def B(self):
        return len(self.resample_estimates)

    @property
    def dim(self):
        return 1 if np.ndim(self.psi_hat) == 0 else len(self.psi_hat)

    def head(self, B):
        """The summary restricted to the first ``B`` resamples."""
        if not 0 <= B <= self.B:
            raise DomainError(f"cannot take {B} of {self.B} resamples")
        return replace(self, resample_estimates=self.resample_estimates[:B])


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    level: float
    B: int
    method: str
    degenerate: bool = False

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class EllipsoidRegion:
    """``{p : (center - p)^T scatter^{-1} (center - p) <= threshold}``."""

    center: np.ndarray
    scatter: np.ndarray
    threshold: float
    level: float
    B: int
    method: str = "cheap-region"

    def contains(self, point):
        return region_contains(self, point)


def check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def require_resamples(summary, minimum, method):
    if summary.B < minimum:
        raise InsufficientResamples(method, summary.B, minimum)


def centered_spread(summary):
    """``S``: root mean square deviation of the resample estimates from ``psi_hat``."""
    if np.ndim(summary.psi_hat) != 0:
        raise DomainError("scalar interval requested for a vector-valued summary; use cheap_region")
    dev = summary.resample_estimates - summary.psi_hat
    return math.sqrt(float(np.dot(dev, dev)) / summary.B)


def _symmetric(summary, half, level, method):
    lo = summary.psi_hat - half
    hi = summary.psi_hat + half
    return Interval(lo, hi, level, summary.B, method, degenerate=lo == hi)


def cheap_interval(summary, alpha=0.05):
    """Two-sided cheap bootstrap interval ``psi_hat -/+ t_{B,1-alpha/2} S``.

    Valid for any ``B >= 1``. A zero spread gives the degenerate interval
    ``[psi_hat, psi_hat]`` rather than an error.
    """
    alpha = check_alpha(alpha)
    require_resamples(summary, 1, "cheap")
    S = centered_spread(summary)
    return _symmetric(summary, t_quantile(summary.B, 1 - alpha / 2) * S, 1 - alpha, "cheap")


def cheap_one_sided(summary, alpha=0.05, side="upper"):
    """One-sided cheap bootstrap bound using ``t_{B,1-alpha}``.

    ``side="upper"`` returns ``[psi_hat - t S, inf)`` and ``side="lower"``
    returns ``(-inf, psi_hat + t S]``.
    """
    alpha = check_alpha(alpha)
    require_resamples(summary, 1, "cheap")
    half = t_quantile(summary.B, 1 - alpha) * centered_spread(summary)
    if side == "upper":
        return Interval(summary.psi_hat - half, math.inf, 1 - alpha, summary.B, "cheap-upper")
    if side == "lower":
        return Interval(-math.inf, summary.psi_hat + half, 1 - alpha, summary.B, "cheap-lower")
    raise DomainError(f"side must be 'upper' or 'lower', got {side!r}")


def cheap_se_interval(summary, alpha=0.05):
    """Interval for ``sigma``, the asymptotic standard deviation of ``sqrt(n) * psi_hat``.

    ``[sqrt(B n) S / sqrt(chi2_{1-alpha/2,B}), sqrt(B n) S / sqrt(chi2_{alpha/2,B})]``
    """
    alpha = check_alpha(alpha)
    require_resamples(summary, 1, "cheap-se")
    if summary.n is None or summary.n < 1:
        raise DomainError("the standard-error interval needs the data size n")
    B = summary.B
    scale = math.sqrt(B * summary.n) * centered_spread(summary)
    lo = scale / math.sqrt(chi2_quantile(B, 1 - alpha / 2))
    hi = scale / math.sqrt(chi2_quantile(B, alpha / 2))
    return Interval(lo, hi, 1 - alpha, B, "cheap-se", degenerate=lo == hi)


def cheap_region(summary, alpha=0.05):
    """Hotelling-T^2 confidence ellipsoid for a vector parameter; needs ``B >= d``."""
    alpha = check_alpha(alpha)
    psi = np.atleast_1d(np.asarray(summary.psi_hat, dtype=float))
    est = summary.resample_estimates.reshape(summary.B, -1)
    d = len(psi)
    require_resamples(summary, max(d, 1), "cheap-region")
    dev = est - psi
    scatter = dev.T @ dev / summary.B
    threshold = hotelling_t2_quantile(d, summary.B, 1 - alpha)
    return EllipsoidRegion(psi, scatter, threshold, 1 - alpha, summary.B)


def region_contains(region, point):
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if point.shape != region.center.shape:
        raise DomainError(f"point has shape {point.shape}, region center {region.center.shape}")
    diff = region.center - point
    if not np.any(diff):
        return True
    try:
        chol = np.linalg.cholesky(region.scatter)
    except np.linalg.LinAlgError:
        raise SingularScatter("resample scatter matrix is not positive definite") from None
    pivots = np.diag(chol) ** 2
    if pivots.min() <= 1e-13 * max(pivots.max(), np.finfo(float).tiny):
        raise SingularScatter("resample scatter matrix is numerically singular")
    z = np.linalg.solve(chol, diff)
    return float(z @ z) <= region.threshold


def evaluate(estimator, sample, resample_index=None):
    """Call ``estimator`` and normalise numerical failures to :class:`EstimatorError`."""
    try:
        value = estimator(sample)
    except EstimatorError as exc:
        if resample_index is None or exc.resample_index is not None:
            raise
        raise EstimatorError(str(exc), resample_index) from exc
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        raise EstimatorError(f"estimator failed: {exc}", resample_index) from exc
    if not np.all(np.isfinite(value)):
        raise EstimatorError("estimator returned a non-finite value", resample_index)
    return value


def resample_estimates(data, estimator, B, stream):
    """``B`` full-size resample estimates, drawn in order from ``stream``."""
    data = as_dataset(data)
    return np.array(
        [evaluate(estimator, resample_with_replacement(data, len(data), stream), b) for b in range(B)]
    )


def run_cheap_bootstrap(data, estimator, B, alpha, stream):
    """Estimate on ``data``, draw ``B`` resample estimates, return ``(summary, interval)``."""
    if B < 1:
        raise InsufficientResamples("cheap", B, 1)
    data = as_dataset(data)
    psi_hat = evaluate(estimator, data)
    summary = ResampleSummary(psi_hat, resample_estimates(data, estimator, B, stream), len(data))
    return summary, cheap_interval(summary, alpha)
