"""Identity catalogue, grid runner and report rendering.

Every identity is checked by computing its two sides through different
routes (power series, quadrature, recurrence, closed form) and comparing
them with the mixed criterion  |lhs - rhs| <= tol * max(1, |rhs|).
Sub-evaluations that fail to converge or raise produce failing cases with
diagnostics; they never abort a grid run.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import DomainError
from .kernels import (DEFAULT_POLICY, EPS, EvalResult, SeriesPolicy, erf, erfi,
                      regularized_upper_gamma_int, sum_series)
from .marcum import (CONTINUATION_MAX_X, marcum_q_integral, marcum_q_limits, marcum_q_recurrence,
                     marcum_q_series, neumann_tail, q0_diag, q0_imag_diag, q0_via_genfunc)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, gamma_envelope, integrate_finite, integrate_semi_infinite
from .special import (LAGUERRE_SUM_CANCELLATION_LIMIT, bessel_i, bessel_i_scaled, bessel_j_scaled,
                      bessel_j_values, bessel_tail_weighted, gen_full_range, laguerre_sequence,
                      laguerre_weighted_sum, s_half_range)

SCHEMA_VERSION = "1"
FORMATS = ("json", "csv", "markdown")
CSV_COLUMNS = ("identity", "point", "lhs", "rhs", "abs_err", "rel_err", "tol_used", "pass", "diagnostics")

#: Step of the central difference used for the x-derivative of S(x, t).
FD_STEP = 1e-5
#: Coordinate standing in for an infinite Marcum argument.
LARGE_ARG = 50.0
LARGE_ARG_TOL = 0.05
#: Small alpha standing in for alpha = 0 in the integral route.
SMALL_ALPHA = 1e-6
SMALL_ALPHA_TOL = 1e-4
#: Laguerre-family grids stop here.
LAGUERRE_X_MAX = 10.0
#: Points whose exponential leading term exceeds S(x, t) by more than this are skipped.
GAMMA_SUM_CANCELLATION_LIMIT = 1e5
#: Flag sub-results with at least this much cancellation in diagnostics.
_NOTE_CANCELLATION = 1e6

LIMIT_ROWS = ("alpha0", "alpha_inf", "beta0", "beta_inf")


@dataclass(frozen=True)
class Policies:
    series: SeriesPolicy = DEFAULT_POLICY
    quad: QuadratureSpec = DEFAULT_SPEC


DEFAULT_POLICIES = Policies()


@dataclass(frozen=True)
class GridSpec:
    x_values: tuple = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
    t_values: tuple = (0.1, 0.25, 0.5, 0.75, 0.9, 1.0)
    orders: tuple = (1, 2, 3, 4, 5)
    laguerre_t_values: tuple = (0.25, 1.0, 2.0, 5.0)

    def __post_init__(self):
        for name in ("x_values", "t_values", "orders", "laguerre_t_values"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for x in self.x_values:
            if not (x >= 0 and math.isfinite(x)):
                raise DomainError(f"grid x values must be finite and >= 0, got {x!r}")
        for t in self.t_values:
            if not (0 < t <= 1):
                raise DomainError(f"grid t values must lie in (0, 1], got {t!r}")
        for m in self.orders:
            if isinstance(m, bool) or int(m) != m or m < 1:
                raise DomainError(f"grid orders must be integers >= 1, got {m!r}")
        for t in self.laguerre_t_values:
            if not (t >= 0 and math.isfinite(t)):
                raise DomainError(f"laguerre t values must be finite and >= 0, got {t!r}")
        object.__setattr__(self, "orders", tuple(int(m) for m in self.orders))


@dataclass(frozen=True)
class IdentityCase:
    identity: str
    point: dict
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    tol_used: float
    passed: bool
    diagnostics: str = ""

    def as_dict(self) -> dict:
        return {
            "identity": self.identity,
            "point": dict(self.point),
            "lhs": _json_float(self.lhs),
            "rhs": _json_float(self.rhs),
            "abs_err": _json_float(self.abs_err),
            "rel_err": _json_float(self.rel_err),
            "tol_used": _json_float(self.tol_used),
            "pass": self.passed,
            "diagnostics": self.diagnostics,
        }


@dataclass
class VerificationReport:
    cases: list = field(default_factory=list)
    generated_for: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def summary(self) -> dict:
        out = {}
        for ident in self.generated_for:
            mine = [c for c in self.cases if c.identity == ident]
            worst = None
            for c in mine:
                if worst is None or _rank(c.rel_err) > _rank(worst.rel_err):
                    worst = c
            entry = {
                "count": len(mine),
                "passed": sum(c.passed for c in mine),
                "max_rel_err": _json_float(worst.rel_err) if worst else None,
                "worst_point": dict(worst.point) if worst else None,
            }
            if ident in self.notes:
                entry["note"] = self.notes[ident]
            out[ident] = entry
        return out


def _rank(v: float) -> float:
    # nan sorts above everything: an undefined error is the worst kind
    return math.inf if math.isnan(v) else v


def _json_float(v):
    v = float(v)
    return v if math.isfinite(v) else None


# ------------------------------------------------------------------ evaluation


class _Side:
    """Collects sub-results of one side of an identity for the diagnostics."""

    def __init__(self, name):
        self.name = name
        self.ok = True
        self.notes = []

    def use(self, label: str, res: EvalResult) -> float:
        if not res.converged:
            self.ok = False
            self.notes.append(f"{label} not converged (err={res.err_estimate:.3g}, terms={res.terms_used})")
        if res.cancellation >= _NOTE_CANCELLATION:
            self.notes.append(f"{label} cancellation={res.cancellation:.3g}")
        return res.value

    def text(self):
        return "; ".join(f"{self.name}: {n}" for n in self.notes)


@dataclass(frozen=True)
class Identity:
    ident: str
    equation: str
    anchor: str
    route: str
    tol: float
    params: tuple
    evaluate: Callable
    domain: Callable
    points: Callable
    guard: Optional[Callable] = None


def _x(point, positive=False, x_max=None):
    if "x" not in point:
        raise DomainError("missing parameter x")
    x = float(point["x"])
    if not math.isfinite(x) or x < 0 or (positive and x == 0):
        raise DomainError(f"x must be {'> 0' if positive else '>= 0'} and finite, got {x!r}")
    if x_max is not None and x > x_max:
        raise DomainError(f"x must be <= {x_max:.6g}, got {x!r}")
    return x


def _t(point, below_one=False, t_max=1.0, allow_above=False):
    if "t" not in point:
        raise DomainError("missing parameter t")
    t = float(point["t"])
    if not math.isfinite(t) or t <= 0:
        raise DomainError(f"t must be > 0 and finite, got {t!r}")
    if not allow_above and t > t_max:
        raise DomainError(f"t must be <= {t_max:g}, got {t!r}")
    if below_one and t >= 1:
        raise DomainError(f"t must be < 1 here, got {t!r}")
    return t


def _order_param(point, key="m", lo=1, hi=None):
    if key not in point:
        raise DomainError(f"missing parameter {key}")
    m = point[key]
    if isinstance(m, bool) or int(m) != m or m < lo:
        raise DomainError(f"{key} must be an integer >= {lo}, got {m!r}")
    if hi is not None and m > hi:
        raise DomainError(f"{key} must be <= {hi}, got {m!r}")
    return int(m)


def _xt_points(grid: GridSpec, t_filter=lambda t: True):
    return [{"x": x, "t": t} for x in grid.x_values for t in grid.t_values if t_filter(t)]


def _laguerre_points(grid: GridSpec, orders=(None,)):
    pts = []
    for m in orders:
        for x in grid.x_values:
            for t in grid.laguerre_t_values:
                p = {"x": x, "t": t}
                if m is not None:
                    p["m"] = m
                pts.append(p)
    return pts


def _decay(x, t):
    return math.exp(-0.5 * x * (t + 1.0 / t))


# E03 ---------------------------------------------------------------------


def _e03(point, pol: Policies):
    x, t = _x(point), _t(point)
    lhs = _Side("lhs")

    def terms():
        yield bessel_i(0, x, pol.series).value
        n = 1
        while True:
            yield (t ** n + t ** -n) * bessel_i(n, x, pol.series).value
            n += 1

    left = lhs.use("symmetric sum", sum_series(terms(), pol.series))
    return left, gen_full_range(x, t), lhs, _Side("rhs"), []


# E06 ---------------------------------------------------------------------


def _e06(point, pol: Policies):
    x, t = _x(point), _t(point, below_one=True)
    lhs = _Side("lhs")
    rhs = math.exp(-x * t / (1.0 - t)) / (1.0 - t)
    # the sum can be many orders below its terms; stop on an absolute target
    target = SeriesPolicy(pol.series.rel_tol, 1e-3 * pol.series.rel_tol, pol.series.max_terms)
    half = math.exp(0.5 * x)
    weights = []

    def terms():
        w = 1.0
        for ln in laguerre_sequence(x):
            weights.append(w)
            yield w * ln
            w *= t

    bound = lambda k: weights[k] * half / (1.0 - t)
    left = lhs.use("Laguerre partial sum", sum_series(terms(), target, envelope=bound))
    return left, rhs, lhs, _Side("rhs"), []


# E08 ---------------------------------------------------------------------


def _chart(x, t):
    return math.sqrt(x / t), math.sqrt(x * t)


def _e08(point, pol: Policies):
    x, t = _x(point, positive=True), _t(point)
    a, b = _chart(x, t)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    q = lhs.use("Q_1 series", marcum_q_series(1, a, b, pol.series))
    for M in range(2, 6):
        q = marcum_q_recurrence(q, M, a, b)
    right = rhs.use("Q_5 series", marcum_q_series(5, a, b, pol.series))
    return q, right, lhs, rhs, []


# E10 ---------------------------------------------------------------------


def _gamma_sum_rhs(x, t, lead, pol: Policies):
    side = _Side("rhs")
    c = x / (2.0 * t)
    z = 0.5 * x * t

    def terms():
        w = 1.0
        k = 1
        while True:
            w *= c / k
            yield w * regularized_upper_gamma_int(k, z)
            k += 1

    tail = side.use("incomplete-gamma sum", sum_series(terms(), pol.series))
    return lead - math.exp(z) * tail, side


_E10_PROBES = ((0.5, 0.75), (1.0, 0.5), (2.0, 0.25))


def _lead_half(x, t):
    return math.exp(0.5 * x * (t + 1.0 / t))


def _lead_over_t(x, t):
    return math.exp(x / t * (t + 1.0 / t))


@lru_cache(maxsize=8)
def e10_reading(pol: Policies = DEFAULT_POLICIES) -> tuple:
    """Probe both readings of the leading exponential; return (chosen, residuals)."""
    worst = {"x/2": 0.0, "x/t": 0.0}
    for x, t in _E10_PROBES:
        s = s_half_range(x, t, pol.series).value
        for name, lead in (("x/2", _lead_half), ("x/t", _lead_over_t)):
            r, _ = _gamma_sum_rhs(x, t, lead(x, t), pol)
            worst[name] = max(worst[name], abs(r - s) / max(1.0, abs(s)))
    chosen = min(worst, key=worst.get)
    return chosen, worst["x/2"], worst["x/t"]


def _e10(point, pol: Policies):
    x, t = _x(point), _t(point)
    lhs = _Side("lhs")
    left = lhs.use("S", s_half_range(x, t, pol.series))
    chosen, r_half, r_t = e10_reading(pol)
    lead = _lead_half if chosen == "x/2" else _lead_over_t
    right, rhs = _gamma_sum_rhs(x, t, lead(x, t), pol)
    other = "x/t" if chosen == "x/2" else "x/2"
    note = (f"reading {chosen} chosen by probes (probe residual {min(r_half, r_t):.3g}); "
            f"reading {other} rejected (probe residual {max(r_half, r_t):.3g})")
    return left, right, lhs, rhs, [note]


def _lead_guard(point, pol: Policies):
    x, t = float(point["x"]), float(point["t"])
    s = s_half_range(x, t, pol.series).value
    ratio = _lead_half(x, t) / s
    if ratio > GAMMA_SUM_CANCELLATION_LIMIT:
        return f"leading exponential exceeds S by {ratio:.3g}"
    return None


# E12 ---------------------------------------------------------------------


def _e12(point, pol: Policies):
    x, t = _x(point), _t(point)
    if x < 2 * FD_STEP:
        raise DomainError(f"x must be >= {2 * FD_STEP:g} for the central difference, got {x!r}")
    lhs, rhs = _Side("lhs"), _Side("rhs")

    def S(v):
        return lhs.use("S", s_half_range(v, t, pol.series))

    def central(h):
        return (S(x + h) - S(x - h)) / (2.0 * h)

    d_h = central(FD_STEP)
    d_half = central(0.5 * FD_STEP)
    deriv = (4.0 * d_half - d_h) / 3.0
    s = rhs.use("S", s_half_range(x, t, pol.series))
    i0 = rhs.use("I_0", bessel_i(0, x, pol.series))
    i1 = rhs.use("I_1", bessel_i(1, x, pol.series))
    # compare dS/dx with the rearranged right-hand side
    right = 0.5 * (t + 1.0 / t) * s - i0 / (2.0 * t) + 0.5 * i1
    return deriv, right, lhs, rhs, [f"richardson h={FD_STEP:g}"]


# E13 / E15 / E16 -----------------------------------------------------------


def _i_weighted_integral(order, X, t, pol: Policies):
    c = 0.5 * (t + 1.0 / t)

    def f(x):
        return bessel_i_scaled(order, x) * np.exp((1.0 - c) * x)

    return integrate_finite(f, 0.0, X, pol.quad, vectorized=True)


def _antiderivative(order, x, t, C1, pol: Policies, side: _Side):
    q = side.use("Q_0 genfunc", q0_via_genfunc(x, t, pol.series)) if x > 0 else 0.0
    i0 = side.use("I_0", bessel_i(0, x, pol.series))
    e = _decay(x, t)
    d = 1.0 - t * t
    if order == 0:
        return 4 * t / d * q + 2 * t / d * i0 * e + 4 * t / d * (C1 - 1.0)
    return 2 * (1 + t * t) / d * q + 2 / d * i0 * e + 4 / d * (C1 - 1.0)


def _e15_16(order):
    def run(point, pol: Policies):
        X, t = _x(point), _t(point, below_one=True)
        lhs, rhs = _Side("lhs"), _Side("rhs")
        left = lhs.use(f"quadrature of I_{order}", _i_weighted_integral(order, X, t, pol))
        right = (_antiderivative(order, X, t, 0.5, pol, rhs)
                 - _antiderivative(order, 0.0, t, 0.5, pol, rhs))
        return left, right, lhs, rhs, ["C1 = 1/2"]
    return run


def integration_constant(order: int, t: float, pol: Policies = DEFAULT_POLICIES) -> float:
    """C_1 making the closed-form antiderivative of I_order(x) exp(-x(t+1/t)/2) vanish at x = 0."""
    q = q0_via_genfunc(0.0, t, pol.series).value
    i0 = bessel_i(0, 0.0, pol.series).value
    if order == 0:
        # 4t/(1-t^2) (Q_0 + I_0/2 + C_1 - 1) = 0
        return 1.0 - q - 0.5 * i0
    # (2(1+t^2) Q_0 + 2 I_0 + 4 (C_1 - 1)) / (1-t^2) = 0
    return 1.0 - 0.5 * (1 + t * t) * q - 0.5 * i0


def _e13(point, pol: Policies):
    X, t = _x(point), _t(point, below_one=True)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    c = 0.5 * (t + 1.0 / t)
    j0 = lhs.use("quadrature of I_0", _i_weighted_integral(0, X, t, pol))
    j1 = lhs.use("quadrature of I_1", _i_weighted_integral(1, X, t, pol))
    # definite integrals from 0, so the outer constant is S(0, t) = 1
    left = math.exp(c * X) * (-j0 / (2 * t) + 0.5 * j1 + 1.0)
    right = rhs.use("S", s_half_range(X, t, pol.series))
    c15 = integration_constant(0, t, pol)
    c16 = integration_constant(1, t, pol)
    notes = [f"C1 from I_0 antiderivative = {c15!r}", f"C1 from I_1 antiderivative = {c16!r}"]
    if abs(c15 - 0.5) > 4 * EPS or abs(c16 - 0.5) > 4 * EPS:
        lhs.ok = False
        notes.append("C1 differs from 1/2")
    return left, right, lhs, rhs, notes


# E14 / E17 -----------------------------------------------------------------


def _e14(point, pol: Policies):
    x, t = _x(point, positive=True), _t(point)
    a, b = _chart(x, t)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    left = lhs.use("Q_0 via S", q0_via_genfunc(x, t, pol.series))
    right = rhs.use("Q_0 Neumann series", marcum_q_series(0, a, b, pol.series))
    return left, right, lhs, rhs, []


def _e17(point, pol: Policies):
    x, t = _x(point, positive=True), _t(point)
    a, b = _chart(x, t)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    q1 = lhs.use("Q_0(a,b) series", marcum_q_series(0, a, b, pol.series))
    q2 = lhs.use("Q_0(b,a) series", marcum_q_series(0, b, a, pol.series))
    i0 = rhs.use("I_0", bessel_i(0, x, pol.series))
    return q1 + q2, 1.0 - _decay(x, t) * i0, lhs, rhs, []


# erf-integral family ---------------------------------------------------------


def _erf_integral(g: Callable[[float], float], pol: Policies, side: _Side, label: str) -> float:
    return side.use(label, integrate_finite(g, -1.0, 1.0, pol.quad, weight="arcsine"))


def _e19(point, pol: Policies):
    x, t = _x(point, positive=True), _t(point)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    r = math.sqrt(x / 2.0)
    shift = math.sqrt(x / (2.0 * t))

    def g(mu):
        return mu * math.exp(-0.5 * x * (1 - mu * mu)) * erf(r * mu + shift, pol.series).value

    left = _erf_integral(g, pol, lhs, "erf quadrature")
    q = rhs.use("Q_0 genfunc", q0_via_genfunc(x, t, pol.series))
    i0 = rhs.use("I_0", bessel_i(0, x, pol.series))
    right = math.sqrt(2 * math.pi / (x * t)) * (1.0 - q - i0 * _decay(x, t))
    return left, right, lhs, rhs, ["E18 is covered only through this rearrangement"]


def _e27(point, pol: Policies):
    x = _x(point, positive=True)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    r = math.sqrt(x / 2.0)

    def g(mu):
        return mu * math.exp(-0.5 * x * (1 - mu * mu)) * erf(r * (mu + 1.0), pol.series).value

    left = _erf_integral(g, pol, lhs, "erf quadrature")
    i0 = rhs.use("I_0", bessel_i(0, x, pol.series))
    right = math.sqrt(math.pi / (2 * x)) * (1.0 - math.exp(-x) * i0)
    q = q0_diag(x, pol.series).value
    notes = [f"second form sqrt(2pi/x) Q_0 differs by {abs(math.sqrt(2 * math.pi / x) * q - right):.3g}"]
    return left, right, lhs, rhs, notes


def _e29(point, pol: Policies):
    x = _x(point, positive=True, x_max=CONTINUATION_MAX_X)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    r = math.sqrt(x / 2.0)

    def g(mu):
        return mu * math.exp(0.5 * x * (1 - mu * mu)) * erfi(r * (mu + 1.0), pol.series).value

    left = _erf_integral(g, pol, lhs, "erfi quadrature")
    i0 = rhs.use("I_0", bessel_i(0, x, pol.series))
    right = math.sqrt(math.pi / (2 * x)) * (1.0 - math.exp(x) * i0)
    flipped = abs(left + right) / max(1.0, abs(right))
    return left, right, lhs, rhs, [f"residual with the sign of the right side reversed: {flipped:.3g}"]


# Laguerre family -------------------------------------------------------------


def _lag_point(point, m_lo=0, m_hi=None, positive=False):
    x = _x(point, positive=positive, x_max=LAGUERRE_X_MAX)
    t = _t(point, allow_above=True)
    m = _order_param(point, "m", lo=m_lo, hi=m_hi) if (m_lo > 0 or "m" in point) else 0
    return m, x, t


def _e21(point, pol: Policies):
    _, x, t = _lag_point({k: v for k, v in point.items() if k != "m"})
    lhs, rhs = _Side("lhs"), _Side("rhs")
    left = lhs.use("Laguerre sum", laguerre_weighted_sum(0, x, t, pol.series))
    i0 = rhs.use("I_0", bessel_i(0, 2.0 * math.sqrt(x * t), pol.series))
    return left, math.exp(-t) * i0, lhs, rhs, []


def _j_product_integral(m, x, t, pol: Policies, side: _Side, label: str) -> float:
    if m == 0:
        def f(u):
            return np.exp(-u) * bessel_j_values(0, 2.0 * np.sqrt(t * u)) * bessel_j_values(0, 2.0 * np.sqrt(x * u))
        env = gamma_envelope(0)
    else:
        def f(u):
            return (np.exp(-u) * bessel_j_scaled(m, 2.0 * np.sqrt(t * u))
                    * bessel_j_values(0, 2.0 * np.sqrt(x * u)))
        env = gamma_envelope(0, 1.0 / math.factorial(m))
    res = integrate_semi_infinite(f, pol.quad, envelope=env, start_width=20.0, vectorized=True)
    return math.exp(x) * side.use(label, res)


def _e22(point, pol: Policies):
    _, x, t = _lag_point({k: v for k, v in point.items() if k != "m"})
    lhs, rhs = _Side("lhs"), _Side("rhs")
    left = _j_product_integral(0, x, t, pol, lhs, "J0 J0 quadrature")
    i0 = rhs.use("I_0", bessel_i(0, 2.0 * math.sqrt(x * t), pol.series))
    return left, math.exp(-t) * i0, lhs, rhs, []


def _e23(point, pol: Policies):
    m, x, t = _lag_point(point, m_lo=1, m_hi=3)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    left = _j_product_integral(m, x, t, pol, lhs, "Jm J0 quadrature")
    right = rhs.use("Laguerre sum", laguerre_weighted_sum(m, x, t, pol.series))
    return left, right, lhs, rhs, []


def _e24(point, pol: Policies):
    _, x, t = _lag_point({k: v for k, v in point.items() if k != "m"}, positive=True)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    left = lhs.use("Laguerre sum", laguerre_weighted_sum(1, x, t, pol.series))
    q1 = rhs.use("Q_1 integral", marcum_q_integral(1, math.sqrt(2 * x), math.sqrt(2 * t), pol.quad))
    right = math.exp(-t) / t * (1.0 - q1)
    alt = math.exp(x) / t * (1.0 - q1)
    note = f"residual against exp(x)/t (1 - Q_1): {abs(left - alt) / max(1.0, abs(alt)):.3g}"
    return left, right, lhs, rhs, [note]


def _e25(point, pol: Policies):
    m, x, t = _lag_point(point, m_lo=1, positive=True)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    left = lhs.use("Laguerre sum", laguerre_weighted_sum(m, x, t, pol.series))
    tail = rhs.use("Bessel tail", bessel_tail_weighted(m, x, t, pol.series))
    return left, math.exp(-t) / t ** m * tail, lhs, rhs, []


def _laguerre_guard(m_of):
    def guard(point, pol: Policies):
        res = laguerre_weighted_sum(m_of(point), float(point["x"]), float(point["t"]), pol.series)
        if res.cancellation > LAGUERRE_SUM_CANCELLATION_LIMIT:
            return f"Laguerre sum cancellation {res.cancellation:.3g}"
        return None
    return guard


# diagonal closed forms -------------------------------------------------------


def _e26(point, pol: Policies):
    x = _x(point)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    left = lhs.use("closed form", q0_diag(x, pol.series))
    if x == 0:
        return left, 0.0, lhs, rhs, ["Q_0(0, 0) = 0"]
    r = math.sqrt(x)
    right = rhs.use("Q_0 Neumann series", marcum_q_series(0, r, r, pol.series))
    return left, right, lhs, rhs, []


def _e28(point, pol: Policies):
    x = _x(point, x_max=CONTINUATION_MAX_X)
    lhs, rhs = _Side("lhs"), _Side("rhs")
    left = lhs.use("closed form", q0_imag_diag(x, pol.series))
    s = rhs.use("S(x, -1)", s_half_range(x, -1.0, pol.series))
    return left, 1.0 - math.exp(x) * s, lhs, rhs, []


# limit tables ----------------------------------------------------------------

_PRINTED_BETA_INF = 1.0


def printed_limit(M: int, row: str, value: float) -> float:
    """Limit value as the table prints it.

    ``value`` is the finite coordinate (beta for alpha rows, alpha for beta
    rows).  The beta = inf entry is printed as 1 for every M although Q_M
    decreases to 0 there; :func:`marcum_q_limits` returns 0.
    """
    if row == "alpha0":
        return marcum_q_limits(M, 0.0, value)
    if row == "alpha_inf":
        return marcum_q_limits(M, math.inf, value)
    if row == "beta0":
        return marcum_q_limits(M, value, 0.0)
    if row == "beta_inf":
        return _PRINTED_BETA_INF
    raise DomainError(f"row must be one of {LIMIT_ROWS}, got {row!r}")


def _limit_point(point, zero_order):
    row = point.get("row")
    if row not in LIMIT_ROWS:
        raise DomainError(f"row must be one of {LIMIT_ROWS}, got {row!r}")
    M = 0 if zero_order else _order_param(point, "M", lo=1)
    if zero_order and point.get("M", 0) != 0:
        raise DomainError("L30 covers M = 0 only")
    x = _x(point, positive=row != "alpha0")
    return M, row, x


def _q_large(M, alpha, beta, pol: Policies, side: _Side):
    # integral route for M >= 1; M = 0 by stepping the recurrence backwards
    if M >= 1:
        return side.use(f"Q_{M} integral", marcum_q_integral(M, alpha, beta, pol.quad))
    q1 = side.use("Q_1 integral", marcum_q_integral(1, alpha, beta, pol.quad))
    return q1 - marcum_q_recurrence(0.0, 1, alpha, beta)


def _limits(zero_order):
    def run(point, pol: Policies):
        M, row, x = _limit_point(point, zero_order)
        lhs, rhs = _Side("lhs"), _Side("rhs")
        left = printed_limit(M, row, x)
        notes = []
        tol = None
        if row == "alpha0":
            if M == 0:
                tail = rhs.use("Neumann tail at alpha=0", neumann_tail(0, 0.0, x, pol.series))
                right = 1.0 - math.exp(-0.5 * x * x) * tail
            else:
                right = rhs.use(f"Q_{M} integral", marcum_q_integral(M, SMALL_ALPHA, x, pol.quad))
                notes.append(f"alpha = {SMALL_ALPHA:g}")
                tol = SMALL_ALPHA_TOL
        elif row == "beta0":
            right = rhs.use(f"Q_{M} series", marcum_q_series(M, x, 0.0, pol.series))
            tol = 4 * EPS
        elif row == "alpha_inf":
            right = _q_large(M, LARGE_ARG, x, pol, rhs)
            notes.append(f"alpha = {LARGE_ARG:g}")
            tol = LARGE_ARG_TOL
        else:
            right = _q_large(M, x, LARGE_ARG, pol, rhs)
            notes.append(f"beta = {LARGE_ARG:g}; limit of Q_M as beta grows is "
                         f"{marcum_q_limits(M, x, math.inf):g}")
            tol = LARGE_ARG_TOL
        return left, right, lhs, rhs, notes, tol
    return run


def _limit_points(zero_order):
    def points(grid: GridSpec):
        orders = (0,) if zero_order else grid.orders
        pts = []
        for M in orders:
            for row in LIMIT_ROWS:
                for x in grid.x_values:
                    p = {"row": row, "x": x}
                    if not zero_order:
                        p["M"] = M
                    pts.append(p)
        return pts
    return points


# catalogue -------------------------------------------------------------------


def _domain_x(positive=False, x_max=None):
    return lambda p: _x(p, positive=positive, x_max=x_max)


def _domain_xt(positive=False, below_one=False):
    def check(p):
        _x(p, positive=positive)
        _t(p, below_one=below_one)
    return check


def _domain_lag(m_lo=0, m_hi=None, positive=False):
    def check(p):
        q = p if m_lo > 0 else {k: v for k, v in p.items() if k != "m"}
        _lag_point(q, m_lo=m_lo, m_hi=m_hi, positive=positive)
    return check


def _domain_limits(zero_order):
    return lambda p: _limit_point(p, zero_order)


def _m23(grid):
    return [m for m in grid.orders if m <= 3]


CATALOGUE: dict = {}


def _register(ident, equation, anchor, route, tol, params, evaluate, domain, points, guard=None):
    CATALOGUE[ident] = Identity(ident, equation, anchor, route, tol, params, evaluate, domain, points, guard)


_register("E03", "Eq. 3", "I_{-n}(x) = I_n(x)",
          "symmetric sum of t^n I_n over all n vs exp(x(t+1/t)/2)", 1e-10, ("x", "t"),
          _e03, _domain_xt(), lambda g: _xt_points(g))
_register("E06", "Eq. 6", "Series expansion, integral representation and generating function",
          "partial sums of t^n L_n (recurrence) vs exp(-xt/(1-t))/(1-t)", 1e-10, ("x", "t"),
          _e06, _domain_xt(below_one=True), lambda g: _xt_points(g, lambda t: t < 1))
_register("E08", "Eq. 8", "recurrence relations and formal Neumann series",
          "recurrence chain from series Q_1 to M=5 vs series Q_5", 1e-10, ("x", "t"),
          _e08, _domain_xt(positive=True), lambda g: [p for p in _xt_points(g) if p["x"] > 0])
_register("E10", "Eq. 10", "$\\Gamma(k, xt/2)$ is the incomplete gamma function",
          "direct S(x,t) vs exponential minus incomplete-gamma sum (reading chosen by probes)", 1e-10,
          ("x", "t"), _e10, _domain_xt(), lambda g: _xt_points(g), _lead_guard)
_register("E12", "Eq. 12", "converting it to a differential equation",
          "Richardson central difference of S in x vs closed right side", 1e-6, ("x", "t"),
          _e12, _domain_xt(positive=True), lambda g: [p for p in _xt_points(g) if p["x"] >= 2 * FD_STEP])
_register("E13", "Eq. 13", "For the solution of the partial differential equation",
          "S rebuilt from quadrature of the two integrals vs direct S; C1 = 1/2 at x = 0", 1e-7,
          ("x", "t"), _e13, _domain_xt(below_one=True), lambda g: _xt_points(g, lambda t: t < 1), _lead_guard)
_register("E14", "Eq. 14", "the main generating function",
          "Q_0 from direct S vs M=0 Neumann series", 1e-10, ("x", "t"),
          _e14, _domain_xt(positive=True), lambda g: [p for p in _xt_points(g) if p["x"] > 0])
_register("E15", "Eq. 15", "can now be evaluated as",
          "quadrature of I_0 exp(-x(t+1/t)/2) on [0,X] vs closed form difference", 1e-7, ("x", "t"),
          _e15_16(0), _domain_xt(below_one=True), lambda g: _xt_points(g, lambda t: t < 1))
_register("E16", "Eq. 16", "can now be evaluated as",
          "quadrature of I_1 exp(-x(t+1/t)/2) on [0,X] vs closed form difference", 1e-7, ("x", "t"),
          _e15_16(1), _domain_xt(below_one=True), lambda g: _xt_points(g, lambda t: t < 1))
_register("E17", "Eq. 17", "we can easily deduce that",
          "two M=0 Neumann-series values vs 1 - exp(-x(t+1/t)/2) I_0", 1e-10, ("x", "t"),
          _e17, _domain_xt(positive=True), lambda g: [p for p in _xt_points(g) if p["x"] > 0])
_register("E19", "Eq. 19 (Eq. 18 via this rearrangement)", "Using Eq. (14) and Eq. (18)",
          "arcsine-weighted quadrature of the erf integrand vs Q_0 and I_0 closed form", 1e-7,
          ("x", "t"), _e19, _domain_xt(positive=True), lambda g: [p for p in _xt_points(g) if p["x"] > 0])
_register("E21", "Eq. 21", "most noticeable relations between",
          "Laguerre-weighted sum m=0 vs exp(-t) I_0(2 sqrt(xt))", 1e-10, ("x", "t"),
          _e21, _domain_lag(), lambda g: [p for p in _laguerre_points(g) if p["x"] <= LAGUERRE_X_MAX],
          _laguerre_guard(lambda p: 0))
_register("E22", "Eq. 22", "summing the resulting equation over n",
          "semi-infinite quadrature of exp(-u) J_0 J_0 vs exp(-t) I_0(2 sqrt(xt))", 1e-7, ("x", "t"),
          _e22, _domain_lag(), lambda g: [p for p in _laguerre_points(g) if p["x"] <= LAGUERRE_X_MAX])
_register("E23", "Eq. 23", "a more general expression",
          "semi-infinite quadrature of exp(-u) J_m J_0 / (tu)^(m/2) vs Laguerre-weighted sum", 1e-7,
          ("m", "x", "t"), _e23, _domain_lag(m_lo=1, m_hi=3),
          lambda g: [p for p in _laguerre_points(g, _m23(g)) if p["x"] <= LAGUERRE_X_MAX],
          _laguerre_guard(lambda p: p["m"]))
_register("E24", "Eq. 24", "we reobtain the results of Pent",
          "Laguerre-weighted sum m=1 vs (exp(-t)/t)(1 - Q_1(sqrt(2x), sqrt(2t))), Q_1 by quadrature", 1e-10,
          ("x", "t"), _e24, _domain_lag(positive=True),
          lambda g: [p for p in _laguerre_points(g) if 0 < p["x"] <= LAGUERRE_X_MAX],
          _laguerre_guard(lambda p: 1))
_register("E25", "Eq. 25", "the following general formulation",
          "Laguerre-weighted sum vs exp(-t)/t^m times the Bessel tail sum", 1e-10, ("m", "x", "t"),
          _e25, _domain_lag(m_lo=1, positive=True),
          lambda g: [p for p in _laguerre_points(g, g.orders) if 0 < p["x"] <= LAGUERRE_X_MAX],
          _laguerre_guard(lambda p: p["m"]))
_register("E26", "Eq. 26", "For t = 1, then we get",
          "closed form (1 - exp(-x) I_0)/2 vs M=0 Neumann series at alpha = beta = sqrt(x)", 1e-10,
          ("x",), _e26, _domain_x(), lambda g: [{"x": x} for x in g.x_values])
_register("E27", "Eq. 27", "For t = 1, then we get",
          "arcsine-weighted quadrature of the erf integrand vs sqrt(pi/(2x))(1 - exp(-x) I_0)", 1e-7,
          ("x",), _e27, _domain_x(positive=True), lambda g: [{"x": x} for x in g.x_values if x > 0])
_register("E28", "Eq. 28", "For t = -1, then we get",
          "closed form (1 - exp(x) I_0)/2 vs 1 - exp(x) S(x, -1)", 1e-10, ("x",),
          _e28, _domain_x(x_max=CONTINUATION_MAX_X), lambda g: [{"x": x} for x in g.x_values])
_register("E29", "Eq. 29", "For t = -1, then we get",
          "arcsine-weighted quadrature of the erfi integrand vs sqrt(pi/(2x))(1 - exp(x) I_0)", 1e-7,
          ("x",), _e29, _domain_x(positive=True, x_max=CONTINUATION_MAX_X),
          lambda g: [{"x": x} for x in g.x_values if x > 0])
_register("L30", "Eq. 30", "Some limit values of",
          "printed limits of Q_0 vs series at alpha=0 and beta=0, quadrature at 50 for infinite rows",
          1e-10, ("row", "x"), _limits(True), _domain_limits(True), _limit_points(True))
_register("L31", "Eq. 31", "Some limit values of",
          "printed limits of Q_M vs quadrature at alpha=1e-6 and 50, series at beta=0", 1e-7,
          ("M", "row", "x"), _limits(False), _domain_limits(False), _limit_points(False))

IDENTITY_IDS = tuple(CATALOGUE)


def lookup(ident: str) -> Identity:
    try:
        return CATALOGUE[ident]
    except KeyError:
        raise DomainError(f"unknown identity {ident!r}; valid ids: {', '.join(IDENTITY_IDS)}") from None


def _clean_point(ident: Identity, point: dict) -> dict:
    out = {}
    for k in ident.params:
        if k in point and point[k] is not None:
            v = point[k]
            if k in ("m", "M"):
                if isinstance(v, bool) or int(v) != v:
                    raise DomainError(f"{k} must be an integer, got {v!r}")
                v = int(v)
            elif k != "row":
                v = float(v)
            out[k] = v
    return out


def check_domain(ident_id: str, point: dict) -> dict:
    """Validate ``point`` for the identity; returns the normalized point or raises DomainError."""
    ident = lookup(ident_id)
    p = _clean_point(ident, point)
    for k in ident.params:
        if k not in p:
            raise DomainError(f"{ident_id} needs parameter {k}")
    ident.domain(p)
    return p


def _residual(lhs, rhs):
    abs_err = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    if abs_err == 0.0:
        return 0.0, 0.0
    return abs_err, (abs_err / scale if scale > 0 else math.inf)


def verify_point(ident_id: str, point: dict, policies: Policies = DEFAULT_POLICIES,
                 tol: Optional[float] = None) -> IdentityCase:
    """Evaluate both sides of one identity at one point.

    Raises :class:`DomainError` for points outside the identity's domain;
    every failure after that is reported inside the returned case.
    """
    ident = lookup(ident_id)
    p = check_domain(ident_id, point)
    row_tol = None
    try:
        out = ident.evaluate(p, policies)
        if len(out) == 6:
            lhs, rhs, ls, rs, notes, row_tol = out
        else:
            lhs, rhs, ls, rs, notes = out
    except (ArithmeticError, ValueError) as exc:
        used = tol if tol is not None else ident.tol
        return IdentityCase(ident_id, p, math.nan, math.nan, math.nan, math.nan, used, False,
                            f"evaluation failed: {type(exc).__name__}: {exc}")
    used = tol if tol is not None else (row_tol if row_tol is not None else ident.tol)
    lhs, rhs = float(lhs), float(rhs)
    abs_err, rel_err = _residual(lhs, rhs)
    finite = math.isfinite(lhs) and math.isfinite(rhs)
    passed = finite and ls.ok and rs.ok and abs_err <= used * max(1.0, abs(rhs))
    diag = [n for n in notes if n]
    diag += [s for s in (ls.text(), rs.text()) if s]
    if not finite:
        diag.append("non-finite side")
    return IdentityCase(ident_id, p, lhs, rhs, abs_err, rel_err, used, passed, "; ".join(diag))


def _sort_key(case: IdentityCase):
    return case.identity, tuple(sorted(case.point.items()))


def _evaluate(job):
    ident_id, point, policies, tol = job
    return verify_point(ident_id, point, policies, tol)


def plan_grid(ids: Iterable[str], grid: GridSpec, policies: Policies = DEFAULT_POLICIES):
    """Return (jobs, notes): points in each identity's domain, plus exclusion notes."""
    jobs = []
    notes = {}
    for ident_id in ids:
        ident = lookup(ident_id)
        total = 0
        excluded = []
        seen = set()
        for raw in ident.points(grid):
            key = tuple(sorted(raw.items()))
            if key in seen:
                continue
            seen.add(key)
            total += 1
            try:
                p = check_domain(ident_id, raw)
            except DomainError as exc:
                excluded.append(f"{_point_text(raw)} ({exc})")
                continue
            if ident.guard is not None:
                reason = ident.guard(p, policies)
                if reason:
                    excluded.append(f"{_point_text(p)} ({reason})")
                    continue
            jobs.append((ident_id, p))
        if total == len(excluded):
            notes[ident_id] = f"empty grid: all {total} points excluded" + (
                f": {'; '.join(excluded)}" if excluded else "")
        elif excluded:
            notes[ident_id] = f"excluded {len(excluded)} of {total} points: {'; '.join(excluded)}"
    return jobs, notes


def run_grid(ids: Iterable[str], grid: GridSpec = GridSpec(), policies: Policies = DEFAULT_POLICIES,
             *, tol: Optional[float] = None, workers: int = 1) -> VerificationReport:
    """Evaluate every applicable grid point of each identity.

    Cases come back sorted by identity then point, whatever ``workers`` is.
    """
    ids = list(dict.fromkeys(ids))
    if not ids:
        raise DomainError("no identities requested")
    for i in ids:
        lookup(i)
    jobs, notes = plan_grid(ids, grid, policies)
    work = [(i, p, policies, tol) for i, p in jobs]
    if workers > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cases = list(pool.map(_evaluate, work, chunksize=4))
    else:
        cases = [_evaluate(w) for w in work]
    cases.sort(key=_sort_key)
    return VerificationReport(cases=cases, generated_for=sorted(ids), notes=notes)


# ------------------------------------------------------------------ rendering


def _point_text(point: dict) -> str:
    return ";".join(f"{k}={_num(v)}" for k, v in sorted(point.items()))


def _num(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_dict(report: VerificationReport) -> dict:
    out = {"schema_version": report.schema_version}
    if report.generated_for:
        out["generated_for"] = list(report.generated_for)
    out["cases"] = [c.as_dict() for c in report.cases]
    out["summary"] = report.summary()
    return out


def render_report(report: VerificationReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return json.dumps(report_dict(report), separators=(",", ":"), allow_nan=False).encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in report.cases:
            w.writerow([c.identity, _point_text(c.point), repr(c.lhs), repr(c.rhs), repr(c.abs_err),
                        repr(c.rel_err), repr(c.tol_used), "true" if c.passed else "false", c.diagnostics])
        return buf.getvalue().encode()
    if fmt == "markdown":
        return render_summary(report).encode()
    raise DomainError(f"unknown format {fmt!r}; expected one of {', '.join(FORMATS)}")


def render_summary(report: VerificationReport) -> str:
    lines = ["| identity | count | passed | max rel_err | worst point |",
             "|---|---|---|---|---|"]
    notes = []
    for ident, s in report.summary().items():
        rel = "-" if s["max_rel_err"] is None else f"{s['max_rel_err']:.3g}"
        if s["count"] and s["max_rel_err"] is None:
            rel = "nan/inf"
        worst = "-" if s["worst_point"] is None else _point_text(s["worst_point"])
        lines.append(f"| {ident} | {s['count']} | {s['passed']} | {rel} | {worst} |")
        if "note" in s:
            notes.append(f"- {ident}: {s['note']}")
    if notes:
        lines += ["", "Notes:"] + notes
    return "\n".join(lines) + "\n"
