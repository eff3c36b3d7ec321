"""Consistent versions of statements the catalogue reports as failing.

The catalogue checks statements exactly as printed; where a printed form
fails, these tests pin down the form that does hold, so the failure is
known to be in the statement and not in the numerics.
"""
import math

import pytest

from sfverify.kernels import erf, erfi
from sfverify.marcum import marcum_q_integral, marcum_q_series
from sfverify.quadrature import integrate_finite
from sfverify.special import bessel_i, bessel_tail_weighted, laguerre_weighted_sum, s_half_range

LAGUERRE_GRID = [(x, t) for x in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0) for t in (0.25, 1.0, 2.0, 5.0)]


@pytest.mark.parametrize("x,t", LAGUERRE_GRID)
def test_first_order_laguerre_sum_uses_exp_x(x, t):
    lhs = laguerre_weighted_sum(1, x, t).value
    q1 = marcum_q_integral(1, math.sqrt(2 * x), math.sqrt(2 * t)).value
    assert lhs == pytest.approx(math.exp(x) / t * (1 - q1), rel=1e-9)
    # the exp(-t)/t prefactor does not
    assert abs(lhs - math.exp(-t) / t * (1 - q1)) > 1e-3 * lhs


@pytest.mark.parametrize("x,t", [(0.5, 0.25), (1.0, 1.0), (5.0, 2.0)])
def test_first_order_bessel_tail(x, t):
    q1 = marcum_q_integral(1, math.sqrt(2 * x), math.sqrt(2 * t)).value
    assert bessel_tail_weighted(1, x, t).value == pytest.approx(math.exp(x + t) * (1 - q1), rel=1e-10)


def test_first_order_sum_at_origin():
    t = 0.8
    assert laguerre_weighted_sum(1, 0.0, t).value == pytest.approx((1 - math.exp(-t)) / t, rel=1e-14)


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 5.0])
def test_imaginary_erf_integral_is_positive(x):
    r = math.sqrt(x / 2)
    res = integrate_finite(lambda mu: mu * math.exp(0.5 * x * (1 - mu * mu)) * erfi(r * (mu + 1)).value,
                           -1, 1, weight="arcsine")
    expected = math.sqrt(math.pi / (2 * x)) * (math.exp(x) * bessel_i(0, x).value - 1)
    assert res.value > 0
    assert res.value == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("M", [1, 2, 5])
@pytest.mark.parametrize("alpha", [0.5, 3.0, 10.0])
def test_marcum_vanishes_for_large_beta(M, alpha):
    assert marcum_q_integral(M, alpha, 50.0).value < 1e-100
    # the series only reaches zero up to cancellation in 1 - (1 - Q)
    r = marcum_q_series(M, alpha, 20.0)
    assert r.converged and r.value == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize("x,t", [(1.0, 0.5), (5.0, 0.25), (2.0, 1.0), (10.0, 0.9), (20.0, 0.1)])
def test_half_range_sum_erf_representation(x, t):
    # sum_n t^n I_n(x) = I_0(x) + sqrt(tx/(2 pi)) int exp(-x mu + z/2) erf(sqrt(z/2)) dmu,
    # z = t x (1 - mu^2); written on the arcsine weight to keep the rule smooth
    def g(mu):
        z = t * x * (1 - mu * mu)
        return math.sqrt(1 - mu * mu) * math.exp(-x * mu + 0.5 * z) * erf(math.sqrt(0.5 * z)).value

    res = integrate_finite(g, -1, 1, weight="arcsine")
    val = bessel_i(0, x).value + math.sqrt(t * x / (2 * math.pi)) * res.value
    assert val == pytest.approx(s_half_range(x, t).value, rel=1e-12)
