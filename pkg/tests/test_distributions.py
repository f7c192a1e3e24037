import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from cheapboot.distributions import (
    chi2_cdf,
    chi2_quantile,
    f_cdf,
    f_quantile,
    hotelling_t2_cdf,
    hotelling_t2_quantile,
    log_gamma,
    normal_cdf,
    normal_quantile,
    t_cdf,
    t_quantile,
)
from cheapboot.errors import DomainError, InsufficientResamples

PROBS = [i / 100 for i in range(1, 100)]


# -- oracles: integrate the densities directly ------------------------------


def _normal_pdf(x):
    return math.exp(-x * x / 2) / math.sqrt(2 * math.pi)


def _t_pdf(x, df):
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    return c * (1 + x * x / df) ** (-(df + 1) / 2)


def _chi2_pdf(x, df):
    if x <= 0:
        return 0.0
    return math.exp((df / 2 - 1) * math.log(x) - x / 2 - (df / 2) * math.log(2) - math.lgamma(df / 2))


def _integrated_cdf(pdf, x, lower):
    val, _ = integrate.quad(pdf, lower, x, limit=200, epsabs=1e-13, epsrel=1e-12)
    return val


def test_normal_examples():
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.975) == pytest.approx(1.96, abs=0.005)
    # oracle: the point whose integrated density below it is 0.8413447
    assert normal_quantile(0.8413447) == pytest.approx(1.0, abs=1e-4)
    assert 0.5 + _integrated_cdf(_normal_pdf, 1.0, 0.0) == pytest.approx(0.8413447, abs=1e-7)


@pytest.mark.parametrize("p", [0.01, 0.2, 0.5, 0.9, 0.975, 0.999])
def test_normal_quantile_against_integrated_density(p):
    x = normal_quantile(p)
    assert 0.5 + _integrated_cdf(_normal_pdf, x, 0.0) == pytest.approx(p, abs=1e-10)


@pytest.mark.parametrize("df", [1, 2, 3, 5, 10, 30])
@pytest.mark.parametrize("p", [0.025, 0.6, 0.95, 0.975])
def test_t_quantile_against_integrated_density(df, p):
    x = t_quantile(df, p)
    assert 0.5 + _integrated_cdf(lambda u: _t_pdf(u, df), x, 0.0) == pytest.approx(p, abs=1e-9)


def test_t_examples():
    assert t_quantile(1, 0.975) == pytest.approx(12.71, abs=0.01)
    assert t_quantile(2, 0.975) == pytest.approx(4.30, abs=0.01)
    for df in (1, 4, 17):
        assert t_quantile(df, 0.5) == 0.0


@pytest.mark.parametrize("df", [1, 2, 5, 12])
@pytest.mark.parametrize("p", [0.025, 0.5, 0.95, 0.975])
def test_chi2_quantile_against_integrated_density(df, p):
    x = chi2_quantile(df, p)
    assert _integrated_cdf(lambda u: _chi2_pdf(u, df), x, 0.0) == pytest.approx(p, abs=1e-9)


def test_chi2_closed_forms():
    assert chi2_quantile(2, 0.95) == pytest.approx(-2 * math.log(0.05), abs=1e-10)
    assert chi2_quantile(2, 0.5) == pytest.approx(-2 * math.log(0.5), abs=1e-10)
    # chi2_1 is Z^2
    assert chi2_quantile(1, 0.95) == pytest.approx(normal_quantile(0.975) ** 2, abs=1e-10)


@pytest.mark.parametrize(
    "family,quantile,cdf",
    [
        ("normal", lambda p: normal_quantile(p), lambda x: normal_cdf(x)),
        ("t3", lambda p: t_quantile(3, p), lambda x: t_cdf(3, x)),
        ("t1", lambda p: t_quantile(1, p), lambda x: t_cdf(1, x)),
        ("chi2_4", lambda p: chi2_quantile(4, p), lambda x: chi2_cdf(4, x)),
        ("f_3_7", lambda p: f_quantile(3, 7, p), lambda x: f_cdf(3, 7, x)),
        ("T2_2_5", lambda p: hotelling_t2_quantile(2, 5, p), lambda x: hotelling_t2_cdf(2, 5, x)),
    ],
)
def test_round_trip_and_monotone(family, quantile, cdf):
    xs = [quantile(p) for p in PROBS]
    assert all(b > a for a, b in zip(xs, xs[1:]))
    for p, x in zip(PROBS, xs):
        assert cdf(x) == pytest.approx(p, abs=1e-8)


@given(st.integers(1, 200), st.floats(0.001, 0.999))
def test_t_round_trip_property(df, p):
    assert t_cdf(df, t_quantile(df, p)) == pytest.approx(p, abs=1e-8)


@pytest.mark.parametrize("p", [0.6, 0.75, 0.9, 0.95, 0.975])
def test_t_to_normal_limit(p):
    gaps = [abs(t_quantile(df, p) - normal_quantile(p)) for df in (1, 2, 5, 10, 50, 200)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    if p <= 0.95:
        assert gaps[-1] < 0.01
    else:
        # the 0.975 gap at df=200 is 0.0119; 0.01 is first reached near df=240
        assert gaps[-1] == pytest.approx(0.0119, abs=5e-4)
        assert abs(t_quantile(240, p) - normal_quantile(p)) < 0.01


@pytest.mark.parametrize("B", range(1, 31))
def test_hotelling_reduces_to_squared_t(B):
    assert hotelling_t2_quantile(1, B, 0.95) == pytest.approx(t_quantile(B, 0.975) ** 2, abs=1e-8, rel=1e-10)


def _t2_statistic(rng, d, B, draws, chunk=1_000_000):
    """Z0' S^-1 Z0 with S = (1/B) sum Z_b Z_b' for i.i.d. N(0, I_2) vectors."""
    assert d == 2
    out = []
    for start in range(0, draws, chunk):
        m = min(chunk, draws - start)
        z0 = rng.standard_normal((m, 2))
        zb = rng.standard_normal((m, B, 2))
        s11 = np.mean(zb[:, :, 0] ** 2, axis=1)
        s22 = np.mean(zb[:, :, 1] ** 2, axis=1)
        s12 = np.mean(zb[:, :, 0] * zb[:, :, 1], axis=1)
        det = s11 * s22 - s12 * s12
        out.append((s22 * z0[:, 0] ** 2 - 2 * s12 * z0[:, 0] * z0[:, 1] + s11 * z0[:, 1] ** 2) / det)
    return np.concatenate(out)


@pytest.mark.parametrize("B", [2, 10])
def test_hotelling_quantile_against_monte_carlo(oracle_rng, B):
    draws = 10_000_000
    stat = _t2_statistic(oracle_rng, 2, B, draws)
    q = hotelling_t2_quantile(2, B, 0.95)
    frac = np.mean(stat <= q)
    assert abs(frac - 0.95) < 4 * math.sqrt(0.95 * 0.05 / draws)


def test_hotelling_needs_B_at_least_d():
    with pytest.raises(InsufficientResamples):
        hotelling_t2_quantile(3, 2, 0.95)


def test_log_gamma_examples():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), abs=1e-14)
    assert log_gamma(10.0) == pytest.approx(math.log(362880), rel=1e-14)


@given(st.floats(1e-3, 150))
def test_log_gamma_matches_gamma(x):
    assert math.exp(log_gamma(x)) == pytest.approx(math.gamma(x), rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_probabilities_outside_open_interval_rejected(bad):
    for fn in (normal_quantile, lambda p: t_quantile(3, p), lambda p: chi2_quantile(3, p)):
        with pytest.raises(DomainError):
            fn(bad)


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_bad_degrees_rejected(bad):
    with pytest.raises(DomainError):
        t_quantile(bad, 0.9)


@pytest.mark.parametrize("x", [0.0, -2.0])
def test_log_gamma_domain(x):
    with pytest.raises(DomainError):
        log_gamma(x)
