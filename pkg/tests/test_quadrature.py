import math

import numpy as np
import pytest

from sfverify.errors import DomainError, EvaluationError
from sfverify.quadrature import (GAUSS_NODES, GAUSS_WEIGHTS, KRONROD_NODES, KRONROD_WEIGHTS, QuadratureSpec,
                                 gamma_envelope, integrate_finite, integrate_semi_infinite, refinement_levels)


def test_rule_constants():
    x, w = np.polynomial.legendre.leggauss(7)
    assert np.allclose(GAUSS_NODES, x, atol=1e-15)
    assert np.allclose(GAUSS_WEIGHTS, w, atol=1e-15)
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    # Kronrod rule integrates x^22 exactly on [-1, 1]
    assert float(KRONROD_WEIGHTS @ KRONROD_NODES ** 22) == pytest.approx(2 / 23, rel=1e-14)


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(DomainError):
        QuadratureSpec(max_refinements=0)


def test_arcsine_weight():
    res = integrate_finite(lambda mu: 1.0, -1, 1, weight="arcsine")
    assert res.value == pytest.approx(math.pi, rel=1e-12)


def test_exponential_on_arcsine_weight():
    # (1/pi) int exp(-mu) / sqrt(1-mu^2) = I_0(1)
    res = integrate_finite(np.exp, -1, 1, weight="arcsine", vectorized=True)
    assert res.value / math.pi == pytest.approx(1.2660658777520083, rel=1e-13)


def test_semicircle_weight():
    res = integrate_finite(lambda mu: 1.0, -1, 1, weight="semicircle")
    assert res.value == pytest.approx(math.pi / 2, rel=1e-12)


def test_plain_interval():
    res = integrate_finite(math.exp, 0.0, 1.0)
    assert res.converged
    assert res.value == pytest.approx(math.e - 1, rel=1e-13)
    assert integrate_finite(math.exp, 1.0, 1.0).value == 0.0


def test_refinement_errors_shrink():
    errs = [lev.err_estimate for _, lev in zip(range(4), refinement_levels(math.exp, 0.0, 3.0))]
    assert errs[1] >= errs[2] >= errs[3]


def test_non_finite_integrand():
    with pytest.raises(EvaluationError):
        integrate_finite(lambda x: math.inf if x > 0.5 else 1.0, -1.0, 1.0)


def test_bad_weight_and_interval():
    with pytest.raises(DomainError):
        integrate_finite(math.exp, 0, 1, weight="arcsine")
    with pytest.raises(DomainError):
        integrate_finite(math.exp, -1, 1, weight="gauss")
    with pytest.raises(DomainError):
        integrate_finite(math.exp, 1, 0)


def test_semi_infinite_gamma_integrals():
    res = integrate_semi_infinite(lambda u: math.exp(-u))
    assert res.value == pytest.approx(1.0, rel=1e-12)
    res = integrate_semi_infinite(lambda u: u * u * math.exp(-u), envelope=gamma_envelope(2))
    assert res.value == pytest.approx(2.0, rel=1e-12)


def test_semi_infinite_gaussian_from_offset():
    res = integrate_semi_infinite(lambda x: x * math.exp(-x * x / 2), lower=1.0)
    assert res.value == pytest.approx(math.exp(-0.5), rel=1e-12)


def test_gamma_envelope_bounds_tail():
    env = gamma_envelope(3)
    exact = 6 * math.exp(-10) * (1 + 10 + 50 + 1000 / 6)
    assert env(10.0) == pytest.approx(exact, rel=1e-14)
