import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfverify.errors import DomainError
from sfverify.special import (GenArgs, bessel_i, bessel_i_integral, bessel_i_scaled, bessel_j, bessel_j_scaled,
                              bessel_j_values, bessel_tail_weighted, gen_full_range, laguerre, laguerre_integral,
                              laguerre_sequence, laguerre_weighted_sum, s_half_range)

# 40-digit mpmath references
I0_1 = 1.2660658777520083
I1_1 = 0.56515910399248503
I2_3 = 2.2452124409299512
I5_10 = 777.18828640325996
J0_2 = 0.22389077914123567
J3_7 = -0.16755558799533424
L5_3 = 0.85
L10_10 = 27.984126984126984
S_1_HALF = 1.585533317822359
LW0_11 = 0.83861256712602582
LW2_11 = 0.48394053365019746
TAIL2_11 = 1.3154867586761049


def test_bessel_i_values():
    assert bessel_i(0, 0.0).value == 1.0
    assert bessel_i(3, 0.0).value == 0.0
    assert bessel_i(0, 1.0).value == pytest.approx(I0_1, rel=1e-15)
    assert bessel_i(1, 1.0).value == pytest.approx(I1_1, rel=1e-15)
    assert bessel_i(2, 3.0).value == pytest.approx(I2_3, rel=1e-15)
    assert bessel_i(5, 10.0).value == pytest.approx(I5_10, rel=1e-14)


def test_bessel_i_integral_route():
    assert bessel_i_integral(0, 0.0).value == pytest.approx(1.0, rel=1e-13)
    assert bessel_i_integral(0, 1.0).value == pytest.approx(I0_1, rel=1e-12)
    assert bessel_i_integral(2, 3.0).value == pytest.approx(I2_3, rel=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 5])
@pytest.mark.parametrize("x", [0.5, 1.0, 5.0, 10.0])
def test_bessel_i_routes_agree(n, x):
    s = bessel_i(n, x)
    q = bessel_i_integral(n, x)
    assert abs(s.value - q.value) <= max(s.err_estimate + q.err_estimate, 1e-12 * s.value)


def test_bessel_i_scaled_both_branches():
    z = np.array([0.5, 19.9, 20.1, 60.0])
    got = bessel_i_scaled(2, z)
    ref = [math.exp(-v) * bessel_i(2, v).value for v in z]
    assert np.allclose(got, ref, rtol=1e-13, atol=0)


@settings(max_examples=40)
@given(st.integers(0, 6), st.floats(0.05, 30))
def test_bessel_i_ordering(n, x):
    a, b = bessel_i(n, x).value, bessel_i(n + 1, x).value
    assert a > b > 0
    assert bessel_i(n, x * 1.01).value > a


def test_bessel_j_values():
    assert bessel_j(0, 0.0).value == 1.0
    assert bessel_j(2, 0.0).value == 0.0
    assert bessel_j(0, 2.0).value == pytest.approx(J0_2, rel=1e-15)
    assert bessel_j(3, 7.0).value == pytest.approx(J3_7, rel=1e-13)
    assert bessel_j_values(3, np.array([7.0]))[0] == pytest.approx(J3_7, rel=1e-12)
    assert bessel_j_scaled(1, np.array([0.0]))[0] == 1.0


def test_bessel_j_breakdown_flagged():
    assert not bessel_j(0, 80.0).converged


def test_laguerre_values():
    assert laguerre(7, 0.0).value == 1.0
    assert laguerre(2, 1.0).value == -0.5
    assert laguerre(3, 1.0).value == pytest.approx(-2 / 3, rel=1e-15)
    assert laguerre(5, 3.0).value == pytest.approx(L5_3, rel=1e-14)
    assert laguerre(10, 10.0).value == pytest.approx(L10_10, rel=1e-11)


def test_laguerre_integral_route():
    assert laguerre_integral(0, 0.0).value == pytest.approx(1.0, rel=1e-12)
    assert laguerre_integral(2, 1.0).value == pytest.approx(-0.5, rel=1e-10)
    assert laguerre_integral(5, 3.0).value == pytest.approx(laguerre(5, 3.0).value, rel=1e-10)
    with pytest.raises(DomainError):
        laguerre_integral(31, 1.0)


@pytest.mark.parametrize("n", range(11))
@pytest.mark.parametrize("x", [0.1, 1.0, 5.0])
def test_laguerre_routes_agree(n, x):
    a = laguerre(n, x)
    b = laguerre_integral(n, x)
    assert abs(a.value - b.value) <= max(a.err_estimate + b.err_estimate, 1e-9 * max(1, abs(a.value)))


def test_laguerre_recurrence_matches_finite_sum():
    seq = laguerre_sequence(2.5)
    for n, v in zip(range(15), seq):
        assert v == pytest.approx(laguerre(n, 2.5).value, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("t", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("x", [0.5, 2.0])
def test_laguerre_generating_partial_sums(t, x):
    target = math.exp(-x * t / (1 - t)) / (1 - t)
    acc = 0.0
    for n, ln in zip(range(500), laguerre_sequence(x)):
        acc += t ** n * ln
        if abs(acc - target) < 1e-10:
            break
    assert abs(acc - target) < 1e-10


def test_half_range_sum():
    assert s_half_range(0.0, 0.3).value == 1.0
    assert s_half_range(1.0, 0.5).value == pytest.approx(S_1_HALF, rel=1e-14)
    assert s_half_range(1.0, -1.0).value == pytest.approx((math.exp(-1) + I0_1) / 2, rel=1e-14)
    with pytest.raises(DomainError):
        s_half_range(1.0, -0.5)
    with pytest.raises(DomainError):
        s_half_range(1.0, 1.5)


@pytest.mark.parametrize("x,t", [(0.1, 1.0), (1.0, 1.0), (5.0, 1.0), (20.0, 1.0), (0.1, -1.0), (1.0, -1.0)])
def test_half_sums_rebuild_full_range(x, t):
    full = s_half_range(x, t).value + s_half_range(x, 1 / t).value - bessel_i(0, x).value
    assert full == pytest.approx(gen_full_range(x, t), rel=1e-12)


@pytest.mark.parametrize("x", [5.0, 20.0])
def test_half_sums_at_minus_one_large_x(x):
    # exp(-x) comes out of a difference of terms of size I_0(x); only an
    # error relative to I_0(x) is meaningful
    full = 2 * s_half_range(x, -1.0).value - bessel_i(0, x).value
    assert abs(full - gen_full_range(x, -1.0)) <= 1e-14 * bessel_i(0, x).value


def test_full_range_closed_form():
    assert gen_full_range(0.0, 0.7) == 1.0
    assert gen_full_range(2.0, 1.0) == pytest.approx(math.exp(2.0), rel=1e-15)
    sym = sum(0.5 ** n * bessel_i(abs(n), 1.0).value for n in range(-30, 31))
    assert sym == pytest.approx(math.exp(1.25), rel=1e-14)


def test_gen_args_chart():
    g = GenArgs(2.0, 0.5)
    assert g.alpha == pytest.approx(2.0) and g.beta == pytest.approx(1.0)
    back = GenArgs.from_marcum(g.alpha, g.beta)
    assert back.x == pytest.approx(2.0) and back.t == pytest.approx(0.5)
    with pytest.raises(DomainError):
        GenArgs(1.0, 0.0)


def test_laguerre_weighted_sum_values():
    assert laguerre_weighted_sum(3, 4.0, 0.0).value == pytest.approx(1 / 6)
    assert laguerre_weighted_sum(0, 0.0, 1.0).value == pytest.approx(math.exp(-1), rel=1e-15)
    assert laguerre_weighted_sum(0, 1.0, 1.0).value == pytest.approx(LW0_11, rel=1e-14)
    assert laguerre_weighted_sum(0, 1.0, 1.0).value == pytest.approx(
        math.exp(-1) * bessel_i(0, 2.0).value, rel=1e-14)


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 10.0])
@pytest.mark.parametrize("t", [0.25, 1.0, 2.0, 5.0])
def test_laguerre_weighted_sum_m0_closed_form(x, t):
    got = laguerre_weighted_sum(0, x, t).value
    assert got == pytest.approx(math.exp(-t) * bessel_i(0, 2 * math.sqrt(x * t)).value, rel=1e-10)


def test_bessel_tail_weighted():
    assert bessel_tail_weighted(2, 1.0, 1.0).value == pytest.approx(TAIL2_11, rel=1e-14)
    assert bessel_tail_weighted(3, 1.0, 0.0).value == 0.0
    # the x -> 0 end stays regular: only the k = 0 terms survive
    m, t = 2, 0.7
    expected = sum(math.comb(n - 1, m - 1) * t ** n / math.factorial(n) for n in range(m, 60))
    assert bessel_tail_weighted(m, 0.0, t).value == pytest.approx(expected, rel=1e-14)
    with pytest.raises(DomainError):
        bessel_tail_weighted(0, 1.0, 1.0)


def test_tail_sum_matches_laguerre_side():
    # sum = exp(t) t^m * (weighted Laguerre sum) at x = t = 1
    assert bessel_tail_weighted(2, 1.0, 1.0).value == pytest.approx(math.e * LW2_11, rel=1e-13)
