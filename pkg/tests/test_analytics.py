import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from cheapboot.analytics import (
    CumulantCoefficients,
    Polynomial,
    build_p1,
    build_p2,
    draw_zeta_block,
    halfwidth_mean,
    halfwidth_sd,
    halfwidth_table,
    zeta_one_sided,
    zeta_two_sided,
)
from cheapboot.distributions import t_quantile
from cheapboot.errors import DomainError
from cheapboot.rng import RandomStream

from reference_tables import HALFWIDTH_ROWS

ZERO = Polynomial((0.0,))


@pytest.mark.parametrize("B,mean,inflation,sd", HALFWIDTH_ROWS)
def test_halfwidth_against_chi_distribution(B, mean, inflation, sd):
    # oracle: half-width / (sigma / sqrt n) is t * chi_B / sqrt(B)
    t = t_quantile(B, 0.975)
    chi = stats.chi(B)
    assert halfwidth_mean(B) == pytest.approx(t * chi.mean() / math.sqrt(B), rel=1e-10)
    assert halfwidth_sd(B) == pytest.approx(t * chi.std() / math.sqrt(B), rel=1e-8)


@pytest.mark.parametrize("B,mean,inflation,sd", HALFWIDTH_ROWS)
def test_halfwidth_table_rows(B, mean, inflation, sd):
    row = halfwidth_table(20)[B - 1]
    assert row[0] == B
    assert row[1] == pytest.approx(mean, abs=0.01)
    assert row[2] == pytest.approx(inflation, abs=0.2)
    assert row[3] == pytest.approx(sd, abs=0.01)


def test_halfwidth_limits():
    assert abs(halfwidth_mean(2000) - 1.959964) < 0.002
    assert halfwidth_sd(2000) < 0.04
    means = [halfwidth_mean(B) for B in range(1, 60)]
    assert all(b < a for a, b in zip(means, means[1:]))
    with pytest.raises(DomainError):
        halfwidth_mean(0)


def test_halfwidth_large_B_no_overflow():
    assert math.isfinite(halfwidth_mean(10**6)) and halfwidth_sd(10**5) > 0


def test_polynomial_builders():
    assert build_p1(CumulantCoefficients()).is_zero
    assert build_p2(CumulantCoefficients()).is_zero
    p = build_p1(CumulantCoefficients(k12=1.0))
    assert np.allclose(p(np.linspace(-3, 3, 7)), -1.0)
    p = build_p1(CumulantCoefficients(k31=6.0))
    x = np.linspace(-3, 3, 13)
    assert np.allclose(p(x), -(x**2 - 1))


@given(*(st.floats(-5, 5) for _ in range(4)), st.floats(-4, 4))
def test_p2_matches_hermite_form(k12, k31, k22, k41, x):
    k = CumulantCoefficients(k12, k31, k22, k41)
    he = np.polynomial.hermite_e.hermeval
    H1, H3, H5 = he(x, [0, 1]), he(x, [0, 0, 0, 1]), he(x, [0, 0, 0, 0, 0, 1])
    # -x (A + C (x^2 - 3) + D (x^4 - 10 x^2 + 15)) = -(A H1 + C H3 + D H5)
    A, C, D = (k22 + k12**2) / 2, (k41 + 4 * k12 * k31) / 24, k31**2 / 72
    want = -(A * H1 + C * H3 + D * H5)
    assert build_p2(k)(x) == pytest.approx(want, abs=1e-9 * (1 + abs(want)))


def test_polynomial_degree_and_derivative():
    with pytest.raises(DomainError):
        Polynomial((0, 0, 0, 0, 0, 0, 1))
    p = Polynomial((1, 2, 3, 4, 5, 6))
    assert p.derivative().coefficients == (2.0, 6.0, 12.0, 20.0, 30.0)
    assert Polynomial((7.0,)).derivative().is_zero
    with pytest.raises(DomainError):
        CumulantCoefficients(k12=math.inf)


def test_zeta_zero_polynomials_exact():
    for B in (1, 3):
        assert zeta_two_sided(B, 0.05, ZERO, ZERO, 100_000, RandomStream(1)).estimate == 0.0
        for side in ("upper", "lower"):
            assert zeta_one_sided(B, 0.05, ZERO, ZERO, side, 100_000, RandomStream(1)).estimate == 0.0


def test_zeta_constant_p2_symmetry():
    z = zeta_two_sided(3, 0.05, Polynomial((2.5,)), ZERO, 200_000, RandomStream(2))
    assert abs(z.estimate) <= 3 * z.std_error and z.std_error > 0


def test_zeta_identity_with_no_restriction():
    z = zeta_two_sided(4, 0.05, Polynomial((0.0, 1.0)), ZERO, 200_000, RandomStream(3), threshold=math.inf)
    assert abs(z.estimate) <= 3 * z.std_error


def test_zeta_q_term_identity_with_no_restriction():
    q = Polynomial((0.0, 0.0, 0.0, 1.0))
    z = zeta_two_sided(2, 0.05, ZERO, q, 200_000, RandomStream(4), threshold=math.inf)
    # E[3 Z^2 - Z^4] = 0
    assert abs(z.estimate) <= 3 * z.std_error


def test_one_sided_complement_bookkeeping():
    # shared draws: upper(t) + lower(t) = everything + two-sided(t)
    B, t, N = 3, t_quantile(3, 0.95), 50_000
    p, q = Polynomial((0.3, 0.0, -0.7)), Polynomial((1.0, 0.0, 0.4))
    kw = dict(threshold=t, block=N)
    up = zeta_one_sided(B, 0.1, p, q, "upper", N, RandomStream(9), **kw)
    lo = zeta_one_sided(B, 0.1, p, q, "lower", N, RandomStream(9), **kw)
    both = zeta_two_sided(B, 0.1, p, q, N, RandomStream(9), **kw)
    everything = zeta_two_sided(B, 0.1, p, q, N, RandomStream(9), threshold=math.inf, block=N)
    assert up.estimate + lo.estimate == pytest.approx(everything.estimate + both.estimate, abs=1e-9)


def test_one_sided_constant_p1_direct_oracle():
    B, c, N = 4, 1.7, 100_000
    t = t_quantile(B, 0.95)
    z = zeta_one_sided(B, 0.05, Polynomial((c,)), ZERO, "upper", N, RandomStream(10), block=N)
    Z = draw_zeta_block(B, N, RandomStream(10))
    T = Z[:, 0] / np.sqrt(np.mean(Z[:, 1:] ** 2, axis=1))
    direct = -c * B * np.mean(np.where(T <= t, Z[:, B], 0.0))
    assert z.estimate == pytest.approx(direct, rel=1e-9, abs=1e-12)


def test_one_sided_bad_side():
    with pytest.raises(DomainError):
        zeta_one_sided(2, 0.05, ZERO, ZERO, "both", 10, RandomStream(1))


def test_zeta_deterministic_and_block_invariant():
    p = Polynomial((0.0, 1.0, 0.0, -0.2))
    a = zeta_two_sided(2, 0.05, p, ZERO, 30_000, RandomStream(5), block=30_000)
    b = zeta_two_sided(2, 0.05, p, ZERO, 30_000, RandomStream(5), block=30_000)
    assert a == b
    c = zeta_two_sided(2, 0.05, p, ZERO, 30_000, RandomStream(5), block=7_000)
    assert c.estimate == pytest.approx(a.estimate, abs=5 * a.std_error)


def test_standard_error_scales_as_root_N():
    # doubling N divides the standard error by sqrt(2)
    p = Polynomial((0.0, 1.0, 0.0, -0.5))
    a = zeta_two_sided(3, 0.05, p, ZERO, 200_000, RandomStream(6))
    b = zeta_two_sided(3, 0.05, p, ZERO, 400_000, RandomStream(7))
    ratio = b.std_error / a.std_error
    assert 1 / 1.2 <= ratio * math.sqrt(2) <= 1.2
