"""Conventional basic, percentile and standard-error bootstrap intervals.

These need ``B >= 2`` and raise :class:`InsufficientResamples` below that;
the experiment harness records such cases as NA.

Empirical quantiles use the inverse empirical CDF: ``q_p`` is the
``ceil(p * B)``-th order statistic. At ``alpha = 0.05`` the lower limit
therefore moves off the sample minimum when ``B`` reaches 41.
"""

import math

import numpy as np

from .cheap import Interval, require_resamples, check_alpha
from .distributions import normal_quantile

__all__ = [
    "order_index",
    "empirical_quantile",
    "basic_bootstrap_interval",
    "percentile_bootstrap_interval",
    "se_bootstrap_interval",
]

# Guards ceil() against products such as 0.6 * 100 = 60.00000000000001.
_CEIL_FUZZ = 1e-9


def order_index(p, m):
    """1-based rank ``ceil(p * m)`` clamped to ``[1, m]``."""
    return min(max(math.ceil(p * m - _CEIL_FUZZ), 1), m)


def empirical_quantile(values, p):
    x = np.sort(np.asarray(values, dtype=float))
    return float(x[order_index(p, len(x)) - 1])


def _quantile_pair(summary, alpha):
    x = np.sort(summary.resample_estimates)
    B = len(x)
    return float(x[order_index(alpha / 2, B) - 1]), float(x[order_index(1 - alpha / 2, B) - 1])


def basic_bootstrap_interval(summary, alpha=0.05):
    """``[2 psi_hat - q_{1-alpha/2}, 2 psi_hat - q_{alpha/2}]``."""
    alpha = check_alpha(alpha)
    require_resamples(summary, 2, "basic")
    q_lo, q_hi = _quantile_pair(summary, alpha)
    lo = 2 * summary.psi_hat - q_hi
    hi = 2 * summary.psi_hat - q_lo
    return Interval(lo, hi, 1 - alpha, summary.B, "basic", degenerate=lo == hi)


def percentile_bootstrap_interval(summary, alpha=0.05):
    alpha = check_alpha(alpha)
    require_resamples(summary, 2, "percentile")
    lo, hi = _quantile_pair(summary, alpha)
    return Interval(lo, hi, 1 - alpha, summary.B, "percentile", degenerate=lo == hi)


def se_bootstrap_interval(summary, alpha=0.05):
    """Normal interval with the bootstrap standard error (``B - 1`` denominator)."""
    alpha = check_alpha(alpha)
    require_resamples(summary, 2, "se")
    sd = float(np.std(summary.resample_estimates, ddof=1))
    half = normal_quantile(1 - alpha / 2) * sd
    lo, hi = summary.psi_hat - half, summary.psi_hat + half
    return Interval(lo, hi, 1 - alpha, summary.B, "se", degenerate=lo == hi)
