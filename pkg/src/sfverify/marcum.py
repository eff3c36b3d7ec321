"""Generalized Marcum Q-function Q_M(alpha, beta) for integer M >= 0.

Three independent routes:

* Neumann series   1 - exp(-(a^2+b^2)/2) * sum_{n>=M} (b/a)^n I_n(a b)
* defining integral  int_b^inf x (x/a)^(M-1) exp(-(x^2+a^2)/2) I_{M-1}(a x) dx   (M >= 1)
* recurrence        Q_M = Q_{M-1} + (b/a)^(M-1) exp(-(a^2+b^2)/2) I_{M-1}(a b)

plus the zeroth-order closed forms available through the half-range
generating sum S(x, t).  Values are returned raw; ``MarcumResult.clamped``
gives the number forced into [0, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from .errors import DomainError, EvaluationError, RangeError
from .kernels import (DEFAULT_POLICY, EPS, LOG_DBL_MAX, EvalResult, SeriesPolicy,
                      regularized_upper_gamma_int, sum_series)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_semi_infinite
from .special import bessel_i, bessel_i_scaled, s_half_range

#: Largest x for which exp(x) I_0(x) (and erfi(sqrt(2x))) stay finite.
CONTINUATION_MAX_X = 0.5 * LOG_DBL_MAX


@dataclass(frozen=True)
class MarcumArgs:
    M: int
    alpha: float
    beta: float

    def __post_init__(self):
        if isinstance(self.M, bool) or int(self.M) != self.M or self.M < 0:
            raise DomainError(f"M must be a nonnegative integer, got {self.M!r}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not v >= 0:
                raise DomainError(f"{name} must be >= 0 (fold signs first), got {v!r}")

    @classmethod
    def folded(cls, M: int, alpha: float, beta: float) -> "MarcumArgs":
        """Q_M is even in alpha and in beta; map signed arguments to |alpha|, |beta|."""
        return cls(M, abs(float(alpha)), abs(float(beta)))


@dataclass(frozen=True)
class MarcumResult(EvalResult):
    @property
    def clamped(self) -> float:
        return min(max(self.value, 0.0), 1.0)


def _marcum(res: EvalResult) -> MarcumResult:
    return MarcumResult(res.value, res.err_estimate, res.terms_used, res.converged, res.cancellation)


def _finite_args(M, alpha, beta, need_alpha=True) -> MarcumArgs:
    args = MarcumArgs(M, float(alpha), float(beta))
    if not (math.isfinite(args.alpha) and math.isfinite(args.beta)):
        raise DomainError("infinite arguments are limit values; use marcum_q_limits")
    if need_alpha and args.alpha == 0.0:
        raise DomainError("alpha = 0 is a limit value; use marcum_q_limits")
    return args


def _neumann_terms(M: int, alpha: float, beta: float, policy: SeriesPolicy, ok: list) -> Iterator[float]:
    # (b/a)^n I_n(ab) = (b^2/2)^n sum_k (a^2 b^2/4)^k / (k! (n+k)!)
    lead = 0.5 * beta * beta
    q = 0.25 * (alpha * beta) ** 2
    w = 1.0
    for j in range(1, M + 1):
        w *= lead / j
    n = M
    while True:
        def inner(n=n):
            term = 1.0
            k = 0
            while True:
                yield term
                k += 1
                term *= q / (k * (n + k))
        r = sum_series(inner(), policy)
        ok[0] &= r.converged
        yield w * r.value
        n += 1
        w *= lead / n


def neumann_tail(M: int, alpha: float, beta: float,
                 policy: SeriesPolicy = DEFAULT_POLICY) -> EvalResult:
    """sum_{n>=M} (beta/alpha)^n I_n(alpha beta) in the form regular at alpha = 0."""
    ok = [True]
    res = sum_series(_neumann_terms(M, alpha, beta, policy, ok), policy)
    if not ok[0]:
        res = EvalResult(res.value, res.err_estimate, res.terms_used, False, res.cancellation)
    return res


def marcum_q_series(M: int, alpha: float, beta: float,
                    policy: SeriesPolicy = DEFAULT_POLICY) -> MarcumResult:
    """Q_M(alpha, beta) from the Neumann series; needs alpha > 0.

    beta/alpha > 1 is fine: the terms still decay factorially.  Raises
    :class:`RangeError` when the sum leaves the double range (alpha*beta
    beyond roughly 700).
    """
    args = _finite_args(M, alpha, beta)
    try:
        tail = neumann_tail(args.M, args.alpha, args.beta, policy)
    except EvaluationError as exc:
        raise RangeError(f"Neumann series not representable at alpha={alpha!r}, beta={beta!r}: {exc}") from exc
    damp = math.exp(-0.5 * (args.alpha ** 2 + args.beta ** 2))
    scaled = damp * tail.value
    value = 1.0 - scaled
    err = damp * tail.err_estimate + EPS * (1.0 + scaled)
    cancel = (1.0 + scaled) / abs(value) if value != 0.0 else math.inf
    return MarcumResult(value, err, tail.terms_used, tail.converged, max(cancel, tail.cancellation))


def _integral_envelope(n: int, alpha: float):
    # integrand <= h(x) = x (x^2/2)^n exp(-(x-alpha)^2/2) / n!;  log h is concave,
    # so for slope -d(U) < 0 the tail is at most h(U) / d(U).
    log_fact = math.lgamma(n + 1)

    def bound(U):
        d = (U - alpha) - (2 * n + 1) / U
        if d <= 0.0:
            return math.inf
        log_h = (2 * n + 1) * math.log(U) - n * math.log(2.0) - 0.5 * (U - alpha) ** 2 - log_fact
        return math.exp(log_h) / d

    return bound


def marcum_q_integral(M: int, alpha: float, beta: float,
                      spec: QuadratureSpec = DEFAULT_SPEC) -> MarcumResult:
    """Q_M(alpha, beta) by quadrature of its defining integral; M >= 1, alpha > 0.

    The integrand is evaluated as x (x/a)^(M-1) exp(-(x-a)^2/2) [exp(-a x) I_{M-1}(a x)]
    so nothing overflows for large a x.
    """
    args = _finite_args(M, alpha, beta)
    if args.M == 0:
        raise DomainError("the defining integral is used for M >= 1; for M = 0 use q0_via_genfunc")
    n = args.M - 1
    a = args.alpha

    def f(x):
        return x * (x / a) ** n * _gauss(x - a) * bessel_i_scaled(n, a * x)

    start = max(a - args.beta, 0.0) + 10.0
    res = integrate_semi_infinite(f, spec, lower=args.beta, envelope=_integral_envelope(n, a),
                                  start_width=start, vectorized=True)
    return _marcum(res)


def _gauss(d):
    import numpy as np
    return np.exp(-0.5 * d * d)


def marcum_q_recurrence(q_prev: float, M: int, alpha: float, beta: float) -> float:
    """Step Q_{M-1} -> Q_M by adding (b/a)^(M-1) exp(-(a^2+b^2)/2) I_{M-1}(a b) (>= 0)."""
    args = _finite_args(M, alpha, beta)
    if args.M < 1:
        raise DomainError(f"the recurrence produces orders M >= 1, got {args.M}")
    n = args.M - 1
    ratio = args.beta / args.alpha
    scaled_i = float(bessel_i_scaled(n, [args.alpha * args.beta])[0])
    step = ratio ** n * math.exp(-0.5 * (args.alpha - args.beta) ** 2) * scaled_i
    return float(q_prev) + step


def q0_via_genfunc(x: float, t: float, policy: SeriesPolicy = DEFAULT_POLICY) -> MarcumResult:
    """Q_0(sqrt(x/t), sqrt(x t)) = 1 - exp(-x (t + 1/t)/2) S(x, t), for 0 < t <= 1."""
    x = float(x)
    t = float(t)
    if not (0.0 < t <= 1.0):
        raise DomainError(f"q0_via_genfunc needs 0 < t <= 1, got {t!r}")
    s = s_half_range(x, t, policy)
    damp = math.exp(-0.5 * x * (t + 1.0 / t))
    scaled = damp * s.value
    value = 1.0 - scaled
    err = damp * s.err_estimate + EPS * (1.0 + scaled)
    cancel = (1.0 + scaled) / abs(value) if value != 0.0 else math.inf
    return MarcumResult(value, err, s.terms_used, s.converged, max(cancel, 1.0))


def q0_genfunc_any(alpha: float, beta: float, policy: SeriesPolicy = DEFAULT_POLICY) -> MarcumResult:
    """Q_0(alpha, beta) through S for any alpha > 0, beta >= 0.

    For beta > alpha the ratio t = beta/alpha exceeds 1 and the full-range sum
    gives Q_0 = exp(-(a^2+b^2)/2) (S(ab, a/b) - I_0(ab)).
    """
    args = _finite_args(0, alpha, beta)
    if args.beta <= args.alpha:
        if args.beta == 0.0:
            v = -math.expm1(-0.5 * args.alpha ** 2)
            return MarcumResult(v, EPS * v, 1, True, 1.0)
        return q0_via_genfunc(args.alpha * args.beta, args.beta / args.alpha, policy)
    x = args.alpha * args.beta
    s = s_half_range(x, args.alpha / args.beta, policy)
    i0 = bessel_i(0, x, policy)
    damp = math.exp(-0.5 * (args.alpha ** 2 + args.beta ** 2))
    value = damp * (s.value - i0.value)
    err = damp * (s.err_estimate + i0.err_estimate) + EPS * damp * s.value
    return MarcumResult(value, err, s.terms_used, s.converged and i0.converged,
                        max(1.0, s.value / max(abs(s.value - i0.value), 1e-300)))


def q0_diag(x: float, policy: SeriesPolicy = DEFAULT_POLICY) -> MarcumResult:
    """Q_0(sqrt(x), sqrt(x)) = (1 - exp(-x) I_0(x)) / 2."""
    x = float(x)
    if not (x >= 0 and math.isfinite(x)):
        raise DomainError(f"x must be finite and >= 0, got {x!r}")
    i0 = bessel_i(0, x, policy)
    damp = math.exp(-x)
    scaled = damp * i0.value
    if not math.isfinite(scaled):
        raise RangeError(f"exp(-x) I_0(x) not representable at x={x!r}")
    value = 0.5 * (1.0 - scaled)
    err = 0.5 * (damp * i0.err_estimate + EPS * (1.0 + scaled))
    cancel = 0.5 * (1.0 + scaled) / value if value else math.inf
    return MarcumResult(value, err, i0.terms_used, i0.converged, max(cancel, 1.0))


def q0_imag_diag(x: float, policy: SeriesPolicy = DEFAULT_POLICY) -> MarcumResult:
    """Real value of Q_0(i sqrt(x), i sqrt(x)) = (1 - exp(x) I_0(x)) / 2.

    Leaves [0, 1] for x > 0.  Raises :class:`RangeError` for
    x > ``CONTINUATION_MAX_X`` (about 354.9).
    """
    x = float(x)
    if not (x >= 0 and math.isfinite(x)):
        raise DomainError(f"x must be finite and >= 0, got {x!r}")
    if x > CONTINUATION_MAX_X:
        raise RangeError(f"exp(x) I_0(x) overflows for x > {CONTINUATION_MAX_X:.6g}")
    i0 = bessel_i(0, x, policy)
    grow = math.exp(x)
    scaled = grow * i0.value
    if not math.isfinite(scaled):
        raise RangeError(f"exp(x) I_0(x) overflows at x={x!r}")
    value = 0.5 * (1.0 - scaled)
    err = 0.5 * (grow * i0.err_estimate + EPS * (1.0 + scaled))
    return MarcumResult(value, err, i0.terms_used, i0.converged, 1.0)


def marcum_q_limits(M: int, alpha: float, beta: float) -> float:
    """Q_M at a boundary of the (alpha, beta) quadrant.

    Exactly one of alpha, beta must be a limit value (0 or inf).

    ====  ================  ============  ========  =========
    M     alpha = 0         alpha = inf   beta = 0  beta = inf
    ====  ================  ============  ========  =========
    0     0                 1             1-e^{-a^2/2}  0
    >=1   Γ(M, b^2/2)/(M-1)!  1           1         0
    ====  ================  ============  ========  =========

    Q_M is a tail probability in beta, hence the 0 for beta -> inf.
    """
    alpha = abs(float(alpha))
    beta = abs(float(beta))
    if isinstance(M, bool) or int(M) != M or M < 0:
        raise DomainError(f"M must be a nonnegative integer, got {M!r}")
    flags = [v in (0.0, math.inf) for v in (alpha, beta)]
    if flags.count(True) != 1:
        raise DomainError("exactly one of alpha, beta must be a limit value (0 or inf)")
    if flags[0]:
        if alpha == math.inf:
            return 1.0
        if M == 0:
            return 0.0
        return regularized_upper_gamma_int(int(M), 0.5 * beta * beta)
    if beta == math.inf:
        return 0.0
    if M == 0:
        return -math.expm1(-0.5 * alpha * alpha)
    return 1.0


def marcum_q(M: int, alpha: float, beta: float, route: str = "series", *,
             policy: SeriesPolicy = DEFAULT_POLICY, spec: QuadratureSpec = DEFAULT_SPEC) -> MarcumResult:
    """Public entry taking signed arguments; Q_M is even in alpha and beta.

    ``route`` is "series" (Neumann series), "integral" (defining integral,
    M >= 1) or "genfunc" (M = 0 only, through S(x, t)).
    """
    args = MarcumArgs.folded(M, alpha, beta)
    if route == "series":
        return marcum_q_series(args.M, args.alpha, args.beta, policy)
    if route == "integral":
        return marcum_q_integral(args.M, args.alpha, args.beta, spec)
    if route == "genfunc":
        if args.M != 0:
            raise DomainError("the generating-function route covers M = 0 only")
        return q0_genfunc_any(args.alpha, args.beta, policy)
    raise DomainError(f"unknown route {route!r}; expected series, integral or genfunc")
