"""Cheap subsampling intervals: m-out-of-n, bag of little bootstraps and subsampled double bootstrap.

All three fit one frame. Each replication ``b`` produces a pair
``(Psi*_b, Psi_b)`` and the interval is

    psi_hat -/+ t_{B,1-alpha/2} * sqrt(N/n) * S,   S^2 = (1/B) sum_b (Psi*_b - Psi_b)^2

centered at the full-data estimate ``psi_hat``.

========  ===========================  ==========================  ======
variant   Psi*_b                       Psi_b                       N
========  ===========================  ==========================  ======
mn        size-s resample estimate     psi_hat                     s
blb       size-n weighted resample     psi on the one subsample    n
          of the one subsample
sdb       size-n resample of the       psi on the b-th subsample   n
          b-th subsample
========  ===========================  ==========================  ======
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .cheap import Interval, check_alpha, evaluate
from .distributions import t_quantile
from .errors import DomainError, InsufficientResamples
from .rng import (
    WeightedSample,
    as_dataset,
    multinomial_counts,
    resample_with_replacement,
    subsample_without_replacement,
)

__all__ = [
    "VARIANTS",
    "SubsamplePlan",
    "SubsampleSummary",
    "subsample_size",
    "subsample_summary",
    "subsample_interval",
    "cheap_m_out_of_n",
    "cheap_blb",
    "cheap_sdb",
]

VARIANTS = ("m_out_of_n", "blb", "sdb")
_ALIASES = {"mn": "m_out_of_n"}


def subsample_size(n, gamma=0.6):
    """``ceil(n ** gamma)``, clamped to ``[1, n]``."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must lie in (0, 1], got {gamma}")
    # guard against n ** gamma landing a hair above an integer
    return min(max(math.ceil(n**gamma - 1e-9), 1), n)


@dataclass(frozen=True)
class SubsamplePlan:
    variant: str
    s: int
    n: int
    B: int

    def __post_init__(self):
        variant = _ALIASES.get(self.variant, self.variant)
        if variant not in VARIANTS:
            raise DomainError(f"unknown subsampling variant {self.variant!r}")
        object.__setattr__(self, "variant", variant)
        if not 1 <= self.s <= self.n:
            raise DomainError(f"subsample size must satisfy 1 <= s <= n = {self.n}, got s = {self.s}")
        if self.B < 1:
            raise InsufficientResamples(self.variant, self.B, 1)

    @classmethod
    def from_gamma(cls, variant, n, B, gamma=0.6):
        return cls(variant, subsample_size(n, gamma), n, B)

    @property
    def N(self):
        """Size of the resamples behind ``Psi*``; the scale factor is ``sqrt(N/n)``."""
        return self.s if self.variant == "m_out_of_n" else self.n

    @property
    def scale(self):
        return math.sqrt(self.N / self.n)


@dataclass(frozen=True)
class SubsampleSummary:
    """Logged intermediates of one subsampling run."""

    psi_hat: float
    psi_star: np.ndarray
    psi_anchor: np.ndarray
    scale: float
    variant: str

    def __post_init__(self):
        object.__setattr__(self, "psi_star", np.asarray(self.psi_star, dtype=float))
        object.__setattr__(self, "psi_anchor", np.asarray(self.psi_anchor, dtype=float))
        if self.psi_star.shape != self.psi_anchor.shape or self.psi_star.ndim != 1:
            raise DomainError("psi_star and psi_anchor must be 1-d arrays of equal length")

    @property
    def B(self):
        return len(self.psi_star)

    def head(self, B):
        if not 0 <= B <= self.B:
            raise DomainError(f"cannot take {B} of {self.B} resamples")
        return replace(self, psi_star=self.psi_star[:B], psi_anchor=self.psi_anchor[:B])

    @property
    def spread(self):
        dev = self.psi_star - self.psi_anchor
        return math.sqrt(float(dev @ dev) / self.B)


def subsample_summary(data, estimator, plan, stream):
    """Run the resampling for ``plan`` and return the summary without building an interval."""
    data = as_dataset(data)
    if len(data) != plan.n:
        raise DomainError(f"plan expects n = {plan.n}, data has {len(data)} rows")
    psi_hat = float(evaluate(estimator, data))
    B, s, n = plan.B, plan.s, plan.n
    star = np.empty(B)
    if plan.variant == "m_out_of_n":
        for b in range(B):
            star[b] = evaluate(estimator, resample_with_replacement(data, s, stream), b)
        anchor = np.full(B, psi_hat)
    elif plan.variant == "blb":
        sub = subsample_without_replacement(data, s, stream)
        anchor = np.full(B, float(evaluate(estimator, sub)))
        for b in range(B):
            weights = WeightedSample(sub, multinomial_counts(s, n, stream), n)
            star[b] = evaluate(estimator, weights, b)
    else:
        anchor = np.empty(B)
        for b in range(B):
            sub = subsample_without_replacement(data, s, stream)
            anchor[b] = evaluate(estimator, sub, b)
            star[b] = evaluate(estimator, resample_with_replacement(sub, n, stream), b)
    return SubsampleSummary(psi_hat, star, anchor, plan.scale, plan.variant)


def subsample_interval(summary, alpha=0.05):
    alpha = check_alpha(alpha)
    if summary.B < 1:
        raise InsufficientResamples(summary.variant, summary.B, 1)
    half = t_quantile(summary.B, 1 - alpha / 2) * summary.scale * summary.spread
    lo, hi = summary.psi_hat - half, summary.psi_hat + half
    return Interval(lo, hi, 1 - alpha, summary.B, summary.variant, degenerate=lo == hi)


def _run(variant, data, estimator, plan, alpha, stream):
    if plan.variant != variant:
        raise DomainError(f"plan variant is {plan.variant!r}, expected {variant!r}")
    return subsample_interval(subsample_summary(data, estimator, plan, stream), alpha)


def cheap_m_out_of_n(data, estimator, plan, alpha, stream):
    """Size-``s`` with-replacement resamples; half-width scaled by ``sqrt(s/n)``.

    At ``s = n`` this consumes ``stream`` exactly as
    :func:`~cheapboot.cheap.run_cheap_bootstrap` does and returns the same interval.
    """
    return _run("m_out_of_n", data, estimator, plan, alpha, stream)


def cheap_blb(data, estimator, plan, alpha, stream):
    """One size-``s`` subsample; ``B`` multinomial-weighted size-``n`` resamples of it.

    ``estimator`` must accept a :class:`~cheapboot.rng.WeightedSample`.
    """
    return _run("blb", data, estimator, plan, alpha, stream)


def cheap_sdb(data, estimator, plan, alpha, stream):
    """A fresh size-``s`` subsample per replication, each expanded to a size-``n`` resample."""
    return _run("sdb", data, estimator, plan, alpha, stream)
