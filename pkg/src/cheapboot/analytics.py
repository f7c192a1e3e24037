"""Half-width moments of the cheap interval and Monte Carlo Edgeworth coefficients.

Half-width
----------
With ``S`` built from ``B`` resamples, ``sqrt(n) S / sigma`` is approximately
``sqrt(chi2_B / B)``, so the half-width ``t_{B,1-alpha/2} S`` has, ignoring the
``sigma / sqrt(n)`` factor,

    mean = t * sqrt(2/B) * Gamma((B+1)/2) / Gamma(B/2)
    sd   = t * sqrt((B - 2 Gamma((B+1)/2)^2 / Gamma(B/2)^2) / B)

Edgeworth coefficients
----------------------
The ``O(1/n)`` coverage-error coefficient is an expectation over
``Z_0, ..., Z_B`` i.i.d. standard normal, restricted to the coverage event of
the pivot ``Z_0 / sqrt(mean(Z_1^2..Z_B^2))``:

    zeta = B * E[p'(Z_B) - Z_B p(Z_B); S] + E[q'(Z_0) - Z_0 q(Z_0); S]

It has no closed form and is estimated by Monte Carlo, always reported with
its standard error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .cheap import check_alpha
from .distributions import log_gamma, normal_quantile, t_quantile
from .errors import DomainError

__all__ = [
    "halfwidth_mean",
    "halfwidth_sd",
    "halfwidth_table",
    "CumulantCoefficients",
    "Polynomial",
    "build_p1",
    "build_p2",
    "ZetaEstimate",
    "draw_zeta_block",
    "zeta_two_sided",
    "zeta_one_sided",
]


def _gamma_ratio(B):
    # Gamma((B+1)/2) / Gamma(B/2), in log space so large B does not overflow
    return math.exp(log_gamma((B + 1) / 2) - log_gamma(B / 2))


def _check_B(B):
    if int(B) != B or B < 1:
        raise DomainError(f"B must be a positive integer, got {B!r}")
    return int(B)


def halfwidth_mean(B, alpha=0.05):
    B = _check_B(B)
    t = t_quantile(B, 1 - check_alpha(alpha) / 2)
    return t * math.sqrt(2 / B) * _gamma_ratio(B)


def halfwidth_sd(B, alpha=0.05):
    B = _check_B(B)
    t = t_quantile(B, 1 - check_alpha(alpha) / 2)
    radicand = (B - 2 * _gamma_ratio(B) ** 2) / B
    # E[chi_B]^2 < E[chi_B^2] = B, so this is positive up to rounding
    assert radicand > 0, f"negative half-width variance at B={B}"
    return t * math.sqrt(radicand)


def halfwidth_table(B_max=20, alpha=0.05):
    """Rows ``(B, mean, inflation_pct, sd)`` for ``B = 1..B_max``.

    ``inflation_pct`` is the mean relative to the ``B = inf`` limit ``z_{1-alpha/2}``.
    """
    z = normal_quantile(1 - check_alpha(alpha) / 2)
    rows = []
    for B in range(1, _check_B(B_max) + 1):
        m = halfwidth_mean(B, alpha)
        rows.append((B, m, 100 * (m / z - 1), halfwidth_sd(B, alpha)))
    return rows


@dataclass(frozen=True)
class CumulantCoefficients:
    """The ``k_{1,2}``, ``k_{3,1}``, ``k_{2,2}``, ``k_{4,1}`` of a smooth-function model."""

    k12: float = 0.0
    k31: float = 0.0
    k22: float = 0.0
    k41: float = 0.0

    def __post_init__(self):
        for name in ("k12", "k31", "k22", "k41"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")


@dataclass(frozen=True)
class Polynomial:
    """``c0 + c1 x + ... + c5 x^5``."""

    coefficients: tuple = (0.0,)

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        if len(c) > 6:
            if any(c[6:]):
                raise DomainError("polynomial degree must be at most 5")
            c = c[:6]
        if not c or not all(math.isfinite(v) for v in c):
            raise DomainError("coefficients must be a nonempty sequence of finite reals")
        object.__setattr__(self, "coefficients", c)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    def derivative(self):
        c = self.coefficients
        return Polynomial(tuple(k * c[k] for k in range(1, len(c))) or (0.0,))

    @property
    def is_zero(self):
        return not any(self.coefficients)


def build_p1(k):
    """``-(k12 + k31 (x^2 - 1) / 6)``. Pass the coefficients of the other model to get ``q_1``."""
    return Polynomial((-k.k12 + k.k31 / 6, 0.0, -k.k31 / 6))


def build_p2(k):
    """``-x (A + C (x^2 - 3) + D (x^4 - 10 x^2 + 15))`` with
    ``A = (k22 + k12^2)/2``, ``C = (k41 + 4 k12 k31)/24``, ``D = k31^2/72``."""
    A = 0.5 * (k.k22 + k.k12**2)
    C = (k.k41 + 4 * k.k12 * k.k31) / 24
    D = k.k31**2 / 72
    return Polynomial((0.0, -(A - 3 * C + 15 * D), 0.0, -(C - 10 * D), 0.0, -D))


@dataclass(frozen=True)
class ZetaEstimate:
    estimate: float
    std_error: float
    N: int

    def __str__(self):
        return f"{self.estimate:.6g} +/- {self.std_error:.3g} (N={self.N})"


def draw_zeta_block(B, N, stream):
    """``(N, B + 1)`` standard normals; column 0 is ``Z_0``."""
    return stream.normals((N, B + 1))


def _integrand(Z, B, p, q):
    zB, z0 = Z[:, B], Z[:, 0]
    val = np.zeros(len(Z))
    if not p.is_zero:
        val += B * (p.derivative()(zB) - zB * p(zB))
    if not q.is_zero:
        val += q.derivative()(z0) - z0 * q(z0)
    return val


def _pivot(Z):
    return Z[:, 0] / np.sqrt(np.mean(np.square(Z[:, 1:]), axis=1))


def _zeta(B, p, q, N, stream, event, block):
    B = _check_B(B)
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    if p.is_zero and q.is_zero:
        return ZetaEstimate(0.0, 0.0, N)
    total = total_sq = 0.0
    done = 0
    while done < N:
        m = min(block, N - done)
        Z = draw_zeta_block(B, m, stream)
        val = np.where(event(_pivot(Z)), _integrand(Z, B, p, q), 0.0)
        total += float(val.sum())
        total_sq += float(val @ val)
        done += m
    mean = total / N
    var = max(total_sq / N - mean * mean, 0.0) * N / max(N - 1, 1)
    return ZetaEstimate(mean, math.sqrt(var / N), N)


def zeta_two_sided(B, alpha, p2, q2, N, stream, threshold=None, block=100_000):
    """Monte Carlo ``zeta`` on ``{|pivot| <= t_{B,1-alpha/2}}``.

    Parameters
    ----------
    B : int
    alpha : float
    p2, q2 : Polynomial
        Second-order Edgeworth polynomials of the estimator and resample terms.
    N : int
        Monte Carlo size; at least 10^5 is advised.
    stream : RandomStream
    threshold : float, optional
        Overrides the critical value (``math.inf`` drops the restriction).

    Returns
    -------
    ZetaEstimate
    """
    t = t_quantile(B, 1 - check_alpha(alpha) / 2) if threshold is None else threshold
    return _zeta(B, p2, q2, N, stream, lambda T: np.abs(T) <= t, block)


def zeta_one_sided(B, alpha, p1, q1, side, N, stream, threshold=None, block=100_000):
    """Monte Carlo ``zeta_upper`` / ``zeta_lower``.

    ``side="upper"`` uses ``{pivot <= t_{B,1-alpha}}``, the event that the
    interval ``[psi_hat - t S, inf)`` covers; ``side="lower"`` uses the
    mirrored event ``{pivot >= -t_{B,1-alpha}}`` for ``(-inf, psi_hat + t S]``.
    """
    t = t_quantile(B, 1 - check_alpha(alpha)) if threshold is None else threshold
    if side == "upper":
        event = lambda T: T <= t  # noqa: E731
    elif side == "lower":
        event = lambda T: T >= -t  # noqa: E731
    else:
        raise DomainError(f"side must be 'upper' or 'lower', got {side!r}")
    return _zeta(B, p1, q1, N, stream, event, block)
