"""Scalar kernels: compensated series summation, erf, erfi and integer-order Γ(k, z).

Everything here works on Python floats and returns :class:`EvalResult`
records so that callers can see how a value was obtained (term count,
convergence, amount of cancellation) rather than just the number.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .errors import DomainError, EvaluationError, RangeError

EPS = sys.float_info.epsilon
LOG_DBL_MAX = math.log(sys.float_info.max)

#: erfi(y) grows like exp(y**2); beyond this |y| the exponential overflows.
ERFI_MAX_ARG = math.sqrt(LOG_DBL_MAX)

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_ERF_SERIES_MAX = 3.0
_ERFI_SERIES_MAX = 7.0


@dataclass(frozen=True)
class SeriesPolicy:
    """Truncation contract for every infinite sum in the package."""

    rel_tol: float = 1e-14
    abs_tol: float = 1e-300
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol!r}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol!r}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise DomainError(f"max_terms must be a positive integer, got {self.max_terms!r}")

    def tolerance(self, value: float) -> float:
        return max(self.rel_tol * abs(value), self.abs_tol)


DEFAULT_POLICY = SeriesPolicy()


@dataclass(frozen=True)
class EvalResult:
    """A computed value together with how much it can be trusted.

    ``err_estimate`` is the magnitude of the last accepted term for series
    (or the refinement difference for quadrature); ``cancellation`` is the
    largest term magnitude divided by ``max(|value|, abs_tol)``.
    """

    value: float
    err_estimate: float
    terms_used: int
    converged: bool
    cancellation: float = 1.0

    def __float__(self) -> float:
        return self.value


def _two_sum(a: float, b: float) -> tuple[float, float]:
    # Knuth's error-free transformation: a + b == s + err exactly.
    s = a + b
    bp = s - a
    err = (a - (s - bp)) + (b - bp)
    return s, err


class CompensatedSum:
    """Running sum with a second word carrying the rounding error (Neumaier)."""

    __slots__ = ("_s", "_c")

    def __init__(self, value: float = 0.0):
        self._s = float(value)
        self._c = 0.0

    def add(self, x: float) -> None:
        self._s, err = _two_sum(self._s, x)
        self._c += err

    @property
    def value(self) -> float:
        return self._s + self._c


def sum_series(
    terms: Iterable[float],
    policy: SeriesPolicy = DEFAULT_POLICY,
    *,
    envelope: Optional[Callable[[int], float]] = None,
) -> EvalResult:
    """Sum ``terms`` lazily with compensation until the tail is negligible.

    Summation stops at the first index ``k >= 1`` whose term magnitude is
    at most ``max(rel_tol * |partial|, abs_tol)`` and no larger than the
    previous one.  ``envelope(k)``, when given, replaces ``|term_k|`` in that
    test; use it when terms can vanish accidentally (e.g. near a polynomial
    zero) before the series has actually decayed.

    A finite iterable that runs out before ``max_terms`` counts as converged.
    """
    acc = CompensatedSum()
    prev_mag = None
    mag = 0.0
    max_abs = 0.0
    used = 0
    for k, term in enumerate(terms):
        if k >= policy.max_terms:
            break
        term = float(term)
        if not math.isfinite(term):
            raise EvaluationError(f"series term {k} is not finite ({term!r})")
        acc.add(term)
        used = k + 1
        max_abs = max(max_abs, abs(term))
        mag = abs(term) if envelope is None else abs(envelope(k))
        partial = acc.value
        if prev_mag is not None and mag <= policy.tolerance(partial) and mag <= prev_mag:
            return EvalResult(partial, mag, used, True, _cancellation(max_abs, partial, policy))
        prev_mag = mag
    else:
        value = acc.value
        return EvalResult(value, 0.0, used, True, _cancellation(max_abs, value, policy))
    value = acc.value
    return EvalResult(value, mag, used, False, _cancellation(max_abs, value, policy))


def _cancellation(max_abs: float, value: float, policy: SeriesPolicy) -> float:
    if max_abs == 0.0:
        return 1.0
    return max_abs / max(abs(value), policy.abs_tol)


def _scaled(result: EvalResult, factor: float) -> EvalResult:
    return EvalResult(
        result.value * factor,
        result.err_estimate * abs(factor),
        result.terms_used,
        result.converged,
        result.cancellation,
    )


def _check_finite(name: str, v: float) -> float:
    v = float(v)
    if not math.isfinite(v):
        raise DomainError(f"{name} must be finite, got {v!r}")
    return v


def _erf_maclaurin(z: float) -> Iterable[float]:
    # sum_k (-1)^k z^(2k+1) / (k! (2k+1))
    p = z
    z2 = z * z
    k = 0
    while True:
        yield p / (2 * k + 1)
        k += 1
        p *= -z2 / k


def _erfc_continued_fraction(a: float, max_iter: int) -> tuple[float, float, int]:
    # erfc(a) = exp(-a^2)/sqrt(pi) / (a + (1/2)/(a + (2/2)/(a + (3/2)/(a + ...))))
    # evaluated with the modified Lentz method; a > 0.
    tiny = 1e-300
    f = a
    c = f
    d = 0.0
    delta = 0.0
    n = 0
    for n in range(1, max_iter + 1):
        an = 0.5 * n
        d = a + an * d
        d = 1.0 / (d if d != 0.0 else tiny)
        c = a + an / (c if c != 0.0 else tiny)
        delta = c * d
        f *= delta
        if abs(delta - 1.0) <= EPS:
            break
    value = math.exp(-a * a) / (math.sqrt(math.pi) * f)
    return value, abs(delta - 1.0) * value, n


def erf(z: float, policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """Error function, 2/sqrt(pi) * integral of exp(-u^2) from 0 to z.

    |z| <= 3 uses the alternating Maclaurin series (compensated); larger
    |z| goes through a continued fraction for erfc.  The result is computed
    for |z| and the sign applied afterwards, so erf(-z) == -erf(z) exactly.
    """
    z = _check_finite("z", z)
    a = abs(z)
    if a <= _ERF_SERIES_MAX:
        res = _scaled(sum_series(_erf_maclaurin(a), policy), _TWO_OVER_SQRT_PI)
    else:
        tail, err, n = _erfc_continued_fraction(a, policy.max_terms)
        converged = err <= policy.tolerance(1.0 - tail) or err <= EPS
        res = EvalResult(1.0 - tail, err, n, converged, 1.0)
    if z < 0:
        res = _scaled(res, -1.0)
    return res


def _erfi_series(y: float) -> Iterable[float]:
    p = y
    y2 = y * y
    k = 0
    while True:
        yield p / (2 * k + 1)
        k += 1
        p *= y2 / k


def _dawson_asymptotic(y: float) -> Iterable[float]:
    # erfi(y) ~ exp(y^2)/(sqrt(pi) y) * sum_k (2k-1)!! / (2y^2)^k
    a = 1.0
    inv = 1.0 / (2.0 * y * y)
    k = 0
    while True:
        yield a
        k += 1
        a *= (2 * k - 1) * inv


def erfi(y: float, policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """Imaginary error function erf(iy)/i, real for real y.

    Raises :class:`RangeError` for |y| > ``ERFI_MAX_ARG`` (about 26.64),
    where exp(y^2) leaves the double range.
    """
    y = _check_finite("y", y)
    a = abs(y)
    if a > ERFI_MAX_ARG:
        raise RangeError(f"erfi overflows for |y| > {ERFI_MAX_ARG:.6g} (got {y!r})")
    if a <= _ERFI_SERIES_MAX:
        res = _scaled(sum_series(_erfi_series(a), policy), _TWO_OVER_SQRT_PI)
    else:
        series = sum_series(_dawson_asymptotic(a), policy)
        res = _scaled(series, math.exp(a * a) / (math.sqrt(math.pi) * a))
    if not math.isfinite(res.value):
        raise RangeError(f"erfi({y!r}) overflows")
    if y < 0:
        res = _scaled(res, -1.0)
    return res


def _poisson_terms(k: int, z: float) -> list[float]:
    # exp(-z) z^j / j!  for j < k
    if z == 0.0:
        return [1.0] + [0.0] * (k - 1)
    head = math.exp(-z)
    if head > 0.0:
        out = [head]
        for j in range(1, k):
            out.append(out[-1] * z / j)
        return out
    lz = math.log(z)
    return [math.exp(-z + j * lz - math.lgamma(j + 1)) for j in range(k)]


def regularized_upper_gamma_int(k: int, z: float) -> float:
    """Γ(k, z)/(k-1)! for integer k >= 1, z >= 0 (Poisson tail probability)."""
    _check_gamma_args(k, z)
    return math.fsum(_poisson_terms(int(k), float(z)))


def upper_gamma_int(k: int, z: float) -> EvalResult:
    """Upper incomplete gamma Γ(k, z) for integer k >= 1 via its finite sum.

    (k-1)! * exp(-z) * sum_{j<k} z^j / j!; exact up to rounding, no
    truncation error.
    """
    _check_gamma_args(k, z)
    k = int(k)
    q = math.fsum(_poisson_terms(k, float(z)))
    value = math.factorial(k - 1) * q
    if not math.isfinite(value):
        raise RangeError(f"Γ({k}, z) exceeds the double range")
    return EvalResult(value, 2 * k * EPS * value, k, True, 1.0)


def _check_gamma_args(k, z):
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    z = float(z)
    if not (z >= 0.0) or not math.isfinite(z):
        raise DomainError(f"z must be finite and >= 0, got {z!r}")
