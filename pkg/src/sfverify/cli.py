"""Command-line front end: eval, verify, grid and list.

Exit codes: 0 all checks pass, 1 at least one failing case,
2 usage, domain or I/O error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .errors import DomainError
from .kernels import DEFAULT_POLICY, SeriesPolicy, erf, erfi, upper_gamma_int
from .marcum import marcum_q, q0_via_genfunc
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .special import (bessel_i, bessel_i_integral, bessel_j, laguerre, laguerre_integral,
                      laguerre_weighted_sum, s_half_range)

OUTPUT_DIR_ENV = "SFVERIFY_OUTPUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_EXT = {"json": "json", "csv": "csv", "markdown": "md"}


class UsageError(Exception):
    pass


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.function} needs " + ", ".join("--" + n.replace("_", "-") for n in missing))
    return [getattr(args, n) for n in names]


def _eval_bessel_i(a, pol, spec):
    n, x = _need(a, "n", "x")
    if a.route in (None, "series"):
        return bessel_i(n, x, pol)
    if a.route == "integral":
        return bessel_i_integral(n, x, spec)
    raise UsageError("bessel-i routes: series, integral")


def _eval_laguerre(a, pol, spec):
    n, x = _need(a, "n", "x")
    if a.route in (None, "series"):
        return laguerre(n, x, pol)
    if a.route == "integral":
        return laguerre_integral(n, x, spec)
    raise UsageError("laguerre routes: series, integral")


def _eval_marcum(a, pol, spec):
    m, alpha, beta = _need(a, "m", "alpha", "beta")
    route = a.route or "series"
    if route not in ("series", "integral", "genfunc"):
        raise UsageError("marcum-q routes: series, integral, genfunc")
    return marcum_q(m, alpha, beta, route, policy=pol, spec=spec)


FUNCTIONS = {
    "bessel-i": _eval_bessel_i,
    "bessel-j": lambda a, pol, spec: bessel_j(*_need(a, "m", "x"), pol),
    "laguerre": _eval_laguerre,
    "erf": lambda a, pol, spec: erf(*_need(a, "z"), pol),
    "erfi": lambda a, pol, spec: erfi(*_need(a, "y"), pol),
    "gamma-upper": lambda a, pol, spec: upper_gamma_int(*_need(a, "k", "z")),
    "marcum-q": _eval_marcum,
    "q0": lambda a, pol, spec: q0_via_genfunc(*_need(a, "x", "t"), pol),
    "s-sum": lambda a, pol, spec: s_half_range(*_need(a, "x", "t"), pol),
    "laguerre-wsum": lambda a, pol, spec: laguerre_weighted_sum(*_need(a, "m", "x", "t"), pol),
}


def format_result(res) -> str:
    """One line: value=<float> err=<float> terms=<int> converged=<true|false> cancellation=<float>."""
    return (f"value={res.value!r} err={res.err_estimate!r} terms={res.terms_used} "
            f"converged={'true' if res.converged else 'false'} cancellation={res.cancellation!r}")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _policy_args(p):
    p.add_argument("--rel-tol", type=float, help="series relative tolerance")
    p.add_argument("--max-terms", type=int, help="series term limit")
    p.add_argument("--quad-rel-tol", type=float, help="quadrature relative tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sfverify",
                                     description="Bessel, Laguerre and Marcum Q evaluation and identity checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate one function at a point")
    p.add_argument("function", choices=sorted(FUNCTIONS))
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--k", type=int)
    for name in ("x", "z", "y", "t", "alpha", "beta"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--route", help="series | integral (| genfunc for marcum-q)")
    _policy_args(p)

    p = sub.add_parser("verify", help="check one identity at one point")
    p.add_argument("identity")
    p.add_argument("--x", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--M", type=int, dest="M")
    p.add_argument("--row", choices=harness.LIMIT_ROWS)
    p.add_argument("--tol", type=float, help="override the identity's default tolerance")
    p.add_argument("--format", choices=harness.FORMATS, default="json")
    _policy_args(p)

    p = sub.add_parser("grid", help="check identities over a parameter grid")
    p.add_argument("--ids", help='"all" or comma-separated ids')
    p.add_argument("--format", choices=harness.FORMATS)
    p.add_argument("--out", help=f"report path (relative paths resolve against ${OUTPUT_DIR_ENV})")
    p.add_argument("--config", help="JSON file with defaults for any of these options")
    p.add_argument("--x", type=_floats, help="x values, comma separated")
    p.add_argument("--t", type=_floats, help="t values in (0, 1]")
    p.add_argument("--orders", type=_ints, help="orders m / M")
    p.add_argument("--laguerre-t", type=_floats, help="t values for the Laguerre family")
    p.add_argument("--tol", type=float, help="override every identity's tolerance")
    p.add_argument("--workers", type=int, help="worker processes")
    _policy_args(p)

    sub.add_parser("list", help="print the identity catalogue")
    return parser


def _policies(series_rel=None, max_terms=None, quad_rel=None) -> harness.Policies:
    pol = DEFAULT_POLICY
    if series_rel is not None or max_terms is not None:
        pol = SeriesPolicy(series_rel if series_rel is not None else pol.rel_tol, pol.abs_tol,
                           max_terms if max_terms is not None else pol.max_terms)
    spec = DEFAULT_SPEC if quad_rel is None else replace(DEFAULT_SPEC, rel_tol=quad_rel)
    return harness.Policies(pol, spec)


def cmd_eval(a) -> int:
    pol = _policies(a.rel_tol, a.max_terms, a.quad_rel_tol)
    res = FUNCTIONS[a.function](a, pol.series, pol.quad)
    print(format_result(res))
    return EXIT_OK


def cmd_verify(a) -> int:
    ident = harness.lookup(a.identity)
    point = {k: getattr(a, k) for k in ident.params if getattr(a, k, None) is not None}
    pol = _policies(a.rel_tol, a.max_terms, a.quad_rel_tol)
    case = harness.verify_point(a.identity, point, pol, a.tol)
    report = harness.VerificationReport(cases=[case], generated_for=[a.identity])
    sys.stdout.write(harness.render_report(report, a.format).decode())
    if a.format == "json":
        sys.stdout.write("\n")
    return EXIT_OK if case.passed else EXIT_FAIL


_CONFIG_KEYS = {"ids", "format", "out", "series", "quadrature", "grid", "tol", "workers"}


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return cfg


def _grid_from(cfg_grid: dict, a) -> harness.GridSpec:
    allowed = {"x_values", "t_values", "orders", "laguerre_t_values"}
    unknown = set(cfg_grid) - allowed
    if unknown:
        raise UsageError(f"unknown grid keys: {', '.join(sorted(unknown))}")
    kw = dict(cfg_grid)
    for attr, key in (("x", "x_values"), ("t", "t_values"), ("orders", "orders"),
                      ("laguerre_t", "laguerre_t_values")):
        if getattr(a, attr) is not None:
            kw[key] = getattr(a, attr)
    return harness.GridSpec(**kw)


def _output_path(out, fmt):
    base = os.environ.get(OUTPUT_DIR_ENV)
    if out is None:
        return Path(base) / f"report.{_EXT[fmt]}" if base else None
    p = Path(out)
    if not p.is_absolute() and base:
        p = Path(base) / p
    return p


def cmd_grid(a) -> int:
    cfg = load_config(a.config) if a.config else {}
    ids_text = a.ids if a.ids is not None else cfg.get("ids", "all")
    if isinstance(ids_text, list):
        ids = ids_text
    elif ids_text == "all":
        ids = list(harness.IDENTITY_IDS)
    else:
        ids = [i.strip() for i in ids_text.split(",") if i.strip()]
    for i in ids:
        harness.lookup(i)
    fmt = a.format or cfg.get("format", "json")
    if fmt not in harness.FORMATS:
        raise UsageError(f"unknown format {fmt!r}; expected one of {', '.join(harness.FORMATS)}")
    series = cfg.get("series", {})
    quad = cfg.get("quadrature", {})
    pol = _policies(a.rel_tol if a.rel_tol is not None else series.get("rel_tol"),
                    a.max_terms if a.max_terms is not None else series.get("max_terms"),
                    a.quad_rel_tol if a.quad_rel_tol is not None else quad.get("rel_tol"))
    grid = _grid_from(cfg.get("grid", {}), a)
    tol = a.tol if a.tol is not None else cfg.get("tol")
    workers = a.workers if a.workers is not None else cfg.get("workers", 1)
    path = _output_path(a.out if a.out is not None else cfg.get("out"), fmt)

    report = harness.run_grid(ids, grid, pol, tol=tol, workers=int(workers))
    data = harness.render_report(report, fmt)
    if path is None:
        sys.stdout.write(data.decode())
        if fmt == "json":
            sys.stdout.write("\n")
    else:
        path.write_bytes(data)
        sys.stdout.write(harness.render_summary(report))
        print(f"report written to {path}")
    return EXIT_OK if report.all_passed else EXIT_FAIL


def cmd_list(a) -> int:
    for ident in harness.CATALOGUE.values():
        print(f"{ident.ident}\t{ident.equation}\t{ident.anchor}\t{ident.route}\ttol={ident.tol:g}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    handler = {"eval": cmd_eval, "verify": cmd_verify, "grid": cmd_grid, "list": cmd_list}[a.command]
    try:
        return handler(a)
    except UsageError as exc:
        print(f"sfverify {a.command}: usage error: {exc}", file=sys.stderr)
    except (DomainError, OverflowError) as exc:
        print(f"sfverify {a.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
    except ArithmeticError as exc:
        print(f"sfverify {a.command}: evaluation failed: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"sfverify {a.command}: I/O error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
