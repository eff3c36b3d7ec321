"""Bessel I_n / J_m, Laguerre L_n and the generating sums built from them.

Each function exists in at least two independent forms (power series,
integral representation, recurrence, closed form) so that identities can
be checked with routes that do not share arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DomainError
from .kernels import DEFAULT_POLICY, EvalResult, SeriesPolicy, sum_series
from .quadrature import DEFAULT_SPEC, QuadratureSpec, gamma_envelope, integrate_finite, integrate_semi_infinite

#: J_m series results with more cancellation than this are flagged unconverged.
BESSEL_J_CANCELLATION_LIMIT = 1e12
#: Weighted Laguerre sums with more cancellation than this are flagged unconverged.
LAGUERRE_SUM_CANCELLATION_LIMIT = 1e10
#: Largest Laguerre degree accepted by the integral representation.
LAGUERRE_INTEGRAL_MAX_N = 30


@dataclass(frozen=True)
class GenArgs:
    """A point (x, t) of the generating-function chart.

    The Marcum arguments of the same point are alpha = sqrt(x/t) and
    beta = sqrt(x t), so that beta/alpha = t and alpha*beta = x.
    """

    x: float
    t: float

    def __post_init__(self):
        if not (self.x >= 0 and math.isfinite(self.x)):
            raise DomainError(f"x must be finite and >= 0, got {self.x!r}")
        if self.t == 0 or not math.isfinite(self.t):
            raise DomainError(f"t must be finite and nonzero, got {self.t!r}")

    @property
    def alpha(self) -> float:
        return math.sqrt(self.x / self.t)

    @property
    def beta(self) -> float:
        return math.sqrt(self.x * self.t)

    @classmethod
    def from_marcum(cls, alpha: float, beta: float) -> "GenArgs":
        return cls(alpha * beta, beta / alpha)


def _order(n, name="n") -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"{name} must be a nonnegative integer, got {n!r}")
    return int(n)


def _nonneg(v, name="x") -> float:
    v = float(v)
    if not (v >= 0.0 and math.isfinite(v)):
        raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
    return v


def _leading(c: float, n: int) -> float:
    # c**n / n! by repeated multiplication: no overflow in the intermediates
    # unless the result itself overflows.
    out = 1.0
    for j in range(1, n + 1):
        out *= c / j
    return out


# ---------------------------------------------------------------- Bessel I


def _bessel_i_terms(n: int, x: float) -> Iterator[float]:
    h = 0.5 * x
    q = h * h
    term = _leading(h, n)
    k = 0
    while True:
        yield term
        k += 1
        term *= q / (k * (n + k))


def bessel_i(n: int, x: float, policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """Modified Bessel function I_n(x) from its power series (all terms positive)."""
    n = _order(n)
    x = _nonneg(x)
    return sum_series(_bessel_i_terms(n, x), policy)


def bessel_i_integral(n: int, x: float, spec: QuadratureSpec = DEFAULT_SPEC) -> EvalResult:
    """I_n(x) from the integral of (1 - mu^2)^(n - 1/2) exp(-x mu) over [-1, 1]."""
    n = _order(n)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")
    # (2x)^n n! / (pi (2n)!) = prod_j 2x/(n+j) / pi
    pref = 1.0 / math.pi
    for j in range(1, n + 1):
        pref *= 2.0 * x / (n + j)

    def f(mu):
        return (1.0 - mu * mu) ** n * np.exp(-x * mu)

    res = integrate_finite(f, -1.0, 1.0, spec, weight="arcsine", vectorized=True)
    return EvalResult(res.value * pref, res.err_estimate * abs(pref), res.terms_used,
                      res.converged, res.cancellation)


_SCALED_I_SERIES_MAX = 20.0


def bessel_i_scaled(n: int, z) -> np.ndarray:
    """exp(-z) I_n(z) on an array of z >= 0, vectorized.

    Small z uses the power series; large z the trapezoidal rule on
    (1/pi) * integral_0^pi exp(z (cos th - 1)) cos(n th) dth, which converges
    geometrically because the integrand is smooth and periodic.
    """
    n = _order(n)
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z <= _SCALED_I_SERIES_MAX
    if np.any(small):
        zs = z[small]
        h = 0.5 * zs
        term = np.ones_like(zs)
        for j in range(1, n + 1):
            term = term * h / j
        total = term.copy()
        q = h * h
        for k in range(1, 200):
            term = term * q / (k * (n + k))
            total += term
            if np.all(term <= 1e-17 * total):
                break
        out[small] = total * np.exp(-zs)
    if np.any(~small):
        zl = z[~small]
        nodes = int(math.ceil(5.0 * math.sqrt(zl.max()))) + n + 20
        theta = np.linspace(0.0, math.pi, nodes + 1)
        w = np.full(nodes + 1, math.pi / nodes)
        w[0] = w[-1] = 0.5 * math.pi / nodes
        vals = np.exp(zl[:, None] * (np.cos(theta)[None, :] - 1.0)) * np.cos(n * theta)[None, :]
        out[~small] = (vals @ w) / math.pi
    return out


# ---------------------------------------------------------------- Bessel J


def _bessel_j_terms(m: int, x: float) -> Iterator[float]:
    h = 0.5 * x
    q = -h * h
    term = _leading(h, m)
    k = 0
    while True:
        yield term
        k += 1
        term *= q / (k * (m + k))


def bessel_j(m: int, x: float, policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """Bessel J_m(x) from its alternating power series, summed with compensation.

    The series loses about log10(cancellation) digits; results whose
    cancellation exceeds ``BESSEL_J_CANCELLATION_LIMIT`` are returned with
    ``converged=False``.
    """
    m = _order(m, "m")
    x = _nonneg(x)
    res = sum_series(_bessel_j_terms(m, x), policy)
    if res.cancellation > BESSEL_J_CANCELLATION_LIMIT:
        res = EvalResult(res.value, res.err_estimate, res.terms_used, False, res.cancellation)
    return res


_J_SERIES_MAX = 4.0


def bessel_j_scaled(m: int, z) -> np.ndarray:
    """J_m(z) / (z/2)^m on an array of z >= 0, vectorized; equals 1/m! at z = 0.

    Uses the series for z <= 4 and, above that, the trapezoidal rule on
    J_m(z) = (1/pi) integral_0^pi cos(m th - z sin th) dth.
    """
    m = _order(m, "m")
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z <= _J_SERIES_MAX
    if np.any(small):
        h = 0.5 * z[small]
        q = -h * h
        term = np.full_like(h, 1.0 / math.factorial(m))
        total = term.copy()
        for k in range(1, 60):
            term = term * q / (k * (m + k))
            total += term
        out[small] = total
    if np.any(~small):
        zl = z[~small]
        zmax = float(zl.max())
        nodes = int(math.ceil(0.5 * (zmax + m) + 6.0 * zmax ** (1.0 / 3.0))) + 20
        theta = np.linspace(0.0, math.pi, nodes + 1)
        w = np.full(nodes + 1, math.pi / nodes)
        w[0] = w[-1] = 0.5 * math.pi / nodes
        vals = np.cos(m * theta[None, :] - zl[:, None] * np.sin(theta)[None, :])
        out[~small] = (vals @ w) / math.pi / (0.5 * zl) ** m
    return out


def bessel_j_values(m: int, z) -> np.ndarray:
    """J_m(z) on an array of z >= 0 (see :func:`bessel_j_scaled`)."""
    z = np.asarray(z, dtype=float)
    return bessel_j_scaled(m, z) * (0.5 * z) ** m


# ---------------------------------------------------------------- Laguerre


def _laguerre_terms(n: int, x: float) -> Iterator[float]:
    # (-1)^k n! x^k / ((k!)^2 (n-k)!)
    term = 1.0
    yield term
    for k in range(n):
        term *= -x * (n - k) / ((k + 1) * (k + 1))
        yield term


def laguerre(n: int, x: float, policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """Laguerre polynomial L_n(x) from its explicit finite sum (compensated).

    Exact apart from rounding; accurate while ``cancellation`` stays small,
    which holds for the moderate n*x this package works with.
    """
    n = _order(n)
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")
    return sum_series(_laguerre_terms(n, x), policy)


def laguerre_sequence(x: float) -> Iterator[float]:
    """L_0(x), L_1(x), ... from the three-term recurrence.

    (n+1) L_{n+1} = (2n+1-x) L_n - n L_{n-1}.  Used wherever many degrees
    are needed: the finite sum cancels badly once n*x is large.
    """
    x = float(x)
    prev, cur = 1.0, 1.0 - x
    yield prev
    n = 1
    while True:
        yield cur
        prev, cur = cur, ((2 * n + 1 - x) * cur - n * prev) / (n + 1)
        n += 1


def laguerre_integral(n: int, x: float, spec: QuadratureSpec = DEFAULT_SPEC) -> EvalResult:
    """L_n(x) = exp(x)/n! * integral_0^inf u^n exp(-u) J_0(2 sqrt(x u)) du."""
    n = _order(n)
    x = _nonneg(x)
    if n > LAGUERRE_INTEGRAL_MAX_N:
        raise DomainError(f"laguerre_integral supports n <= {LAGUERRE_INTEGRAL_MAX_N}, got {n}")

    def f(u):
        return u ** n * np.exp(-u) * bessel_j_scaled(0, 2.0 * np.sqrt(x * u))

    res = integrate_semi_infinite(f, spec, envelope=gamma_envelope(n), start_width=n + 8.0,
                                  vectorized=True)
    pref = math.exp(x) / math.factorial(n)
    return EvalResult(res.value * pref, res.err_estimate * pref, res.terms_used,
                      res.converged, res.cancellation)


# ---------------------------------------------------------------- generating sums


def s_half_range(x: float, t: float, policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """S(x, t) = sum_{n>=0} t^n I_n(x), summed term by term.

    Truncation is certified with I_n(x) <= (x/2)^n cosh(x) / n!, so
    ``converged`` means the whole neglected tail is below tolerance.
    Negative t is accepted only at t = -1.
    """
    x = _nonneg(x)
    t = float(t)
    if not (-1.0 <= t <= 1.0):
        raise DomainError(f"s_half_range needs |t| <= 1, got t={t!r}")
    if t < 0 and t != -1.0:
        raise DomainError(f"negative t is supported only at t = -1, got {t!r}")
    c = abs(t) * x / 2.0
    log_cosh = x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)

    def terms():
        tn = 1.0
        n = 0
        while True:
            yield tn * bessel_i(n, x, policy).value
            n += 1
            tn *= t

    def tail_bound(k):
        # bound on sum_{n>k} |t|^n I_n(x)
        if c == 0.0:
            return 0.0
        nxt = k + 1
        ratio = c / (nxt + 1)
        if ratio >= 1.0:
            return math.inf
        return math.exp(log_cosh + nxt * math.log(c) - math.lgamma(nxt + 1)) / (1.0 - ratio)

    return sum_series(terms(), policy, envelope=tail_bound)


def gen_full_range(x: float, t: float) -> float:
    """Closed form of sum over all integer n of t^n I_n(x): exp(x (t + 1/t) / 2)."""
    t = float(t)
    if t == 0.0:
        raise DomainError("t must be nonzero")
    return math.exp(0.5 * float(x) * (t + 1.0 / t))


def laguerre_weighted_sum(m: int, x: float, t: float,
                          policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """sum_{n>=0} (-t)^n L_n(x) / (n+m)!, compensated.

    Degrees come from :func:`laguerre_sequence`; the stopping test uses the
    bound |L_n(x)| <= exp(x/2) so a near-zero L_n cannot end the sum early.
    ``converged`` is cleared when the cancellation exceeds
    ``LAGUERRE_SUM_CANCELLATION_LIMIT``.
    """
    m = _order(m, "m")
    x = _nonneg(x)
    t = _nonneg(t, "t")
    half_exp = math.exp(0.5 * x)
    coeffs = []

    def terms():
        c = 1.0 / math.factorial(m)
        for n, ln in enumerate(laguerre_sequence(x)):
            coeffs.append(c)
            yield c * ln
            c *= -t / (n + m + 1)

    res = sum_series(terms(), policy, envelope=lambda k: coeffs[k] * half_exp)
    if res.cancellation > LAGUERRE_SUM_CANCELLATION_LIMIT:
        res = EvalResult(res.value, res.err_estimate, res.terms_used, False, res.cancellation)
    return res


def bessel_tail_weighted(m: int, x: float, t: float,
                         policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """sum_{n>=m} C(n-1, m-1) (t/x)^(n/2) I_n(2 sqrt(x t)), for m >= 1.

    Each (t/x)^(n/2) I_n(2 sqrt(x t)) is evaluated as
    t^n sum_k (x t)^k / (k! (n+k)!), which stays regular as x -> 0.
    """
    m = _order(m, "m")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    x = _nonneg(x)
    t = _nonneg(t, "t")
    q = x * t
    inner_ok = [True]

    def inner(n):
        def gen():
            term = 1.0
            k = 0
            while True:
                yield term
                k += 1
                term *= q / (k * (n + k))
        r = sum_series(gen(), policy)
        inner_ok[0] &= r.converged
        return r.value

    def terms():
        # weight C(n-1, m-1) t^n / n!
        w = _leading(t, m)
        n = m
        while True:
            yield w * inner(n)
            w *= t * n / ((n + 1) * (n - m + 1))
            n += 1

    res = sum_series(terms(), policy)
    if not inner_ok[0]:
        res = EvalResult(res.value, res.err_estimate, res.terms_used, False, res.cancellation)
    return res
