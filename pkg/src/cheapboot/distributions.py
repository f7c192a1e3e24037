"""Quantiles and CDFs for the normal, Student-t, chi-square, F and Hotelling T^2 laws.

The quantiles invert the regularized incomplete beta / gamma functions
through ``scipy.special`` (cdflib's bracketed root finders). Probabilities
of exactly 0 or 1 are rejected: callers that want infinite limits must
clamp themselves.
"""

import math
import operator
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import DomainError, InsufficientResamples

__all__ = [
    "normal_cdf",
    "normal_quantile",
    "t_cdf",
    "t_quantile",
    "chi2_cdf",
    "chi2_quantile",
    "f_cdf",
    "f_quantile",
    "hotelling_t2_cdf",
    "hotelling_t2_quantile",
    "log_gamma",
]


def _check_prob(p):
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError(f"probability must lie strictly inside (0, 1), got {p!r}")
    return arr


def _check_df(df, name="df"):
    try:
        k = operator.index(df)
    except TypeError:
        if isinstance(df, float) and df.is_integer():
            k = int(df)
        else:
            raise DomainError(f"{name} must be a positive integer, got {df!r}") from None
    if k < 1:
        raise DomainError(f"{name} must be a positive integer, got {df!r}")
    return k


def _scalar_or_array(arr):
    return float(arr) if arr.ndim == 0 else arr


def normal_cdf(x):
    return _scalar_or_array(special.ndtr(np.asarray(x, dtype=float)))


def normal_quantile(p):
    """Standard normal quantile; accepts scalars or arrays."""
    return _scalar_or_array(special.ndtri(_check_prob(p)))


def t_cdf(df, x):
    df = _check_df(df)
    return _scalar_or_array(special.stdtr(df, np.asarray(x, dtype=float)))


@lru_cache(maxsize=4096)
def _t_quantile(df, p):
    return float(special.stdtrit(df, p))


def t_quantile(df, p):
    """Quantile of Student's t with ``df`` degrees of freedom."""
    df = _check_df(df)
    _check_prob(p)
    if p == 0.5:
        return 0.0
    return _t_quantile(df, float(p))


def chi2_cdf(df, x):
    df = _check_df(df)
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return _scalar_or_array(special.gammainc(df / 2.0, x / 2.0))


@lru_cache(maxsize=4096)
def _chi2_quantile(df, p):
    return float(2.0 * special.gammaincinv(df / 2.0, p))


def chi2_quantile(df, p):
    df = _check_df(df)
    _check_prob(p)
    return _chi2_quantile(df, float(p))


def f_cdf(d1, d2, x):
    d1 = _check_df(d1, "d1")
    d2 = _check_df(d2, "d2")
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return _scalar_or_array(special.fdtr(d1, d2, x))


@lru_cache(maxsize=4096)
def _f_quantile(d1, d2, p):
    return float(special.fdtri(d1, d2, p))


def f_quantile(d1, d2, p):
    d1 = _check_df(d1, "d1")
    d2 = _check_df(d2, "d2")
    _check_prob(p)
    return _f_quantile(d1, d2, float(p))


def _hotelling_checks(d, B):
    d = _check_df(d, "d")
    B = _check_df(B, "B")
    if B < d:
        raise InsufficientResamples("Hotelling T^2", B, d)
    return d, B


def hotelling_t2_cdf(d, B, x):
    """CDF of Hotelling's T^2 with dimension ``d`` and ``B`` degrees of freedom."""
    d, B = _hotelling_checks(d, B)
    scale = d * B / (B - d + 1)
    return f_cdf(d, B - d + 1, np.asarray(x, dtype=float) / scale)


def hotelling_t2_quantile(d, B, p):
    """Quantile of Hotelling's T^2(d, B) via ``dB/(B-d+1) * F(d, B-d+1)``.

    With ``d = 1`` this is the square of the two-sided t quantile.
    """
    d, B = _hotelling_checks(d, B)
    _check_prob(p)
    return d * B / (B - d + 1) * _f_quantile(d, B - d + 1, float(p))


def log_gamma(x):
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)
