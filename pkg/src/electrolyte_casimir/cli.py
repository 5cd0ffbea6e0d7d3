"""Command-line interface: ``electrolyte-casimir {eval,sweep,fit,validate}``.

Exit codes: 0 success, 1 usage error, 2 numerical failure (including failed
validation checks).  Numbers are printed with 10 significant digits.

Accuracy settings can be preset in a config file given with ``--config``::

    [accuracy]
    quad_order = 80
    mode_tol = 1e-10
    target_rel_err = 1e-9
    spacing = 1.0
    estimate_error = true

Command-line flags override the file.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from typing import Optional, Sequence

import numpy as np

from . import analytic, fitting, geometry, physical, scattering
from .analytic import TABLE_I, RationalModel
from .kernels import AccuracyError, KernelVariant, mode_sum_series
from .scattering import AccuracySpec

METHODS = ("exact", "eq10", "eq16", "pfa", "dipole")
COLUMNS = ("x", "y_minus_1", "u", "f", "phi", "method", "est_error")
DEFAULT_U = (0.0, 0.04, 0.1, 0.25)


class UsageError(Exception):
    """Inconsistent or missing command-line arguments."""


def fmt(v) -> str:
    """10 significant digits; empty for missing values."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(float(v), ".10g")


def _num(v):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return float(format(float(v), ".10g"))


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class Record:
    x: float
    y_minus_1: float
    u: float
    f: float
    phi: float
    method: str
    est_error: float = math.nan

    def row(self) -> list[str]:
        return [fmt(self.x), fmt(self.y_minus_1), fmt(self.u), fmt(self.f), fmt(self.phi),
                self.method, fmt(self.est_error)]

    def to_dict(self) -> dict:
        return {c.name: (getattr(self, c.name) if c.name == "method" else _num(getattr(self, c.name)))
                for c in fields(self)}


def evaluate(red: geometry.ReducedGeometry, method: str, variant=KernelVariant.DIELECTRIC,
             acc: Optional[AccuracySpec] = None, model: RationalModel = TABLE_I) -> Record:
    """f_u at one point with the chosen method; phi is f / f^(1)."""
    y, u = red.y, red.u
    f1 = analytic.single_round_trip(y, u)
    err = math.nan
    if method == "exact":
        res = scattering.free_energy_exact(red, variant, acc or AccuracySpec())
        f, err = res.f, res.error
    elif method == "eq10":
        f, err = f1, 0.0
    elif method == "eq16":
        f = f1 * analytic.phi_rational(y, model)
    elif method == "pfa":
        f = analytic.pfa_limit(y)
    elif method == "dipole":
        f = analytic.large_distance_limit(y, u)
    else:
        raise UsageError(f"unknown method {method!r}")
    return Record(x=red.x, y_minus_1=y - 1.0, u=u, f=f, phi=f / f1, method=method, est_error=err)


def _evaluator(method, variant, acc, model):
    def fn(y, u):
        return evaluate(geometry.from_reduced(y, u), method, variant, acc, model).f
    return fn


def _derivative(method, model):
    if method == "eq10":
        return analytic.single_round_trip_dy
    if method == "eq16":
        return lambda y, u: analytic.free_energy_approx_dy(y, u, model)
    return None


# ------------------------------------------------------------------ argparse


def _add_accuracy(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("accuracy")
    g.add_argument("--config", help="key-value file with an [accuracy] section")
    g.add_argument("--quad-order", type=int)
    g.add_argument("--mode-tol", type=float)
    g.add_argument("--target-rel-err", type=float)
    g.add_argument("--spacing", type=float, help="multiplier on the default node spacing")
    g.add_argument("--no-error-estimate", action="store_true",
                   help="skip the second, coarser solve used for the error estimate")


def _variant_arg(p):
    p.add_argument("--variant", default="dielectric",
                   choices=["dielectric", "metal", *[v.value for v in KernelVariant]])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="electrolyte-casimir", description=(
        "Universal high-temperature Casimir free energy of two spheres in an electrolyte. "
        "Lengths are in metres, temperatures in kelvin, energies in joules, forces in newtons."))
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate f_u at one configuration")
    e.add_argument("--L", type=float, help="surface-to-surface distance (m)")
    e.add_argument("--R1", type=float, help="radius of the first sphere (m)")
    e.add_argument("--R2", type=float, help="radius of the second sphere (m); omit with --plane")
    e.add_argument("--plane", action="store_true", help="second body is a plane")
    e.add_argument("--x", type=float, help="reduced distance L/R_eff")
    e.add_argument("--y", type=float, help="conformal distance y")
    e.add_argument("--u", type=float, help="radius parameter R1 R2/(R1+R2)^2")
    e.add_argument("--method", default="eq16", choices=METHODS)
    e.add_argument("--model", help="JSON file with nu and mu of a rational model")
    e.add_argument("--T", type=float, help="temperature (K)")
    e.add_argument("--debye-length", type=float, default=1e-9, help="Debye length (m)")
    e.add_argument("--ell-T", type=float, default=physical.DEFAULT_ELL_T,
                   help="Matsubara crossover distance (m)")
    e.add_argument("--format", choices=["json", "text"], default="json")
    _variant_arg(e)
    _add_accuracy(e)

    s = sub.add_parser("sweep", help="tabulate f_u over a grid (CSV or JSON)")
    s.add_argument("--variable", choices=["x", "y-1"], default="y-1")
    s.add_argument("--min", type=float, default=1e-3)
    s.add_argument("--max", type=float, default=1e2)
    s.add_argument("--count", type=int, default=31)
    s.add_argument("--scale", choices=["log", "linear"], default="log")
    s.add_argument("--u", default="0,0.04,0.1,0.25", help="comma-separated u values")
    s.add_argument("--method", default="eq16", help="comma-separated methods")
    s.add_argument("--model", help="JSON file with nu and mu of a rational model")
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--output", help="file to write (default: stdout)")
    _variant_arg(s)
    _add_accuracy(s)

    f = sub.add_parser("fit", help="fit the rational model to exact phi samples")
    f.add_argument("--n", type=int, default=2, help="model order")
    f.add_argument("--u-star", type=float, default=0.1)
    f.add_argument("--min", type=float, default=1e-3, help="smallest y-1")
    f.add_argument("--max", type=float, default=1e2, help="largest y-1")
    f.add_argument("--count", type=int, default=31)
    f.add_argument("--validate-u", default="0,0.04,0.1,0.25",
                   help="u values for validation, or 'none'")
    f.add_argument("--validate-only", action="store_true")
    f.add_argument("--model", help="model JSON used with --validate-only")
    f.add_argument("--output", help="write the JSON report here")
    _add_accuracy(f)

    v = sub.add_parser("validate", help="run the built-in consistency checks")
    v.add_argument("--quick", action="store_true", help="reduced grids")
    _variant_arg(v)
    _add_accuracy(v)
    return p


def accuracy_from_args(args) -> AccuracySpec:
    acc = AccuracySpec()
    if getattr(args, "config", None):
        cp = configparser.ConfigParser()
        if not cp.read(args.config):
            raise UsageError(f"cannot read config file {args.config}")
        if cp.has_section("accuracy"):
            sec = cp["accuracy"]
            kw = {}
            for fld in fields(AccuracySpec):
                if fld.name in sec:
                    if fld.name == "estimate_error":
                        kw[fld.name] = sec.getboolean(fld.name)
                    elif fld.name == "quad_order":
                        kw[fld.name] = sec.getint(fld.name)
                    else:
                        kw[fld.name] = sec.getfloat(fld.name)
            unknown = set(sec) - {f.name for f in fields(AccuracySpec)}
            if unknown:
                raise UsageError(f"unknown accuracy keys: {sorted(unknown)}")
            acc = replace(acc, **kw)
    kw = {}
    for name in ("quad_order", "mode_tol", "target_rel_err", "spacing"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    if getattr(args, "no_error_estimate", False):
        kw["estimate_error"] = False
    try:
        return replace(acc, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_model(path: Optional[str]) -> RationalModel:
    if not path:
        return TABLE_I
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read model file {path}: {exc}") from exc
    if "nu" not in d or "mu" not in d:
        raise UsageError("model file needs 'nu' and 'mu' lists")
    return RationalModel(d["nu"], d["mu"], max_deviation=d.get("achieved_eps", math.nan))


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _geometry_from_eval(args):
    physical_given = any(v is not None for v in (args.L, args.R1, args.R2)) or args.plane
    reduced_given = any(v is not None for v in (args.x, args.y, args.u))
    if physical_given and reduced_given:
        raise UsageError("give either --L/--R1/--R2 or --x|--y with --u, not both")
    if physical_given:
        if args.L is None or args.R1 is None or (args.R2 is None and not args.plane):
            raise UsageError("physical geometry needs --L, --R1 and --R2 (or --plane)")
        g = geometry.PhysicalGeometry(L=args.L, R1=args.R1,
                                      R2=args.R2 if args.R2 is not None else math.inf,
                                      plane=args.plane)
        return g, geometry.reduce(g)
    if args.u is None or (args.x is None) == (args.y is None):
        raise UsageError("reduced geometry needs --u and exactly one of --x, --y")
    if args.x is not None:
        return None, geometry.from_distance(args.x, args.u)
    return None, geometry.from_reduced(args.y, args.u)


# ------------------------------------------------------------------ commands


def cmd_eval(args, out) -> int:
    acc = accuracy_from_args(args)
    variant = KernelVariant.parse(args.variant)
    model = _load_model(args.model)
    g, red = _geometry_from_eval(args)
    rec = evaluate(red, args.method, variant, acc, model)
    result = rec.to_dict()
    result["variant"] = variant.value
    if args.T is not None:
        if g is None:
            raise UsageError("--T needs a physical geometry (--L, --R1, --R2)")
        cond = physical.PhysicalConditions(T=args.T, debye_length=args.debye_length,
                                           ell_T=args.ell_T)
        en = physical.dimensional_free_energy(g, cond, rec.f)
        deriv = _derivative(args.method, model)
        if deriv is not None:
            frc = physical.force(g, cond, derivative=deriv)
        else:
            frc = physical.force(g, cond, evaluator=_evaluator(args.method, variant, acc, model))
        result.update(energy_J=_num(en.joules), energy_kT=_num(en.kT_units),
                      entropy_J_per_K=_num(en.entropy), force_N=_num(frc),
                      warnings=physical.validity_check(g, cond))
    if args.format == "json":
        out.write(json.dumps(result, indent=2) + "\n")
    else:
        width = max(len(k) for k in result)
        for k, v in result.items():
            if isinstance(v, float):
                v = fmt(v)
            out.write(f"{k:<{width}}  {v}\n")
    return 0


def sweep_grid(variable: str, lo: float, hi: float, count: int, scale: str) -> np.ndarray:
    if count < 2:
        raise UsageError("count must be at least 2")
    if scale == "log":
        if lo <= 0:
            raise UsageError("log grids need min > 0")
        return np.logspace(math.log10(lo), math.log10(hi), count)
    if variable == "y-1" and lo <= 0:
        raise UsageError("y-1 must be positive")
    return np.linspace(lo, hi, count)


def run_sweep(values, variable, u_values, methods, variant, acc, model, err=sys.stderr):
    """Rows in fixed order (grid point, u, method); failed points are skipped."""
    rows, failures = [], 0
    for v in values:
        for u in u_values:
            red = (geometry.from_distance(v, u) if variable == "x"
                   else geometry.from_reduced(1.0 + v, u))
            for m in methods:
                try:
                    rows.append(evaluate(red, m, variant, acc, model))
                except (AccuracyError, ArithmeticError) as exc:
                    failures += 1
                    err.write(f"failed: {variable}={v:.10g} u={u:.10g} method={m}: {exc}\n")
    return rows, failures


def write_table(rows: Sequence[Record], form: str, out) -> None:
    if form == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow(r.row())
    else:
        out.write(json.dumps({"columns": list(COLUMNS), "rows": [r.to_dict() for r in rows]},
                             indent=2) + "\n")


def cmd_sweep(args, out) -> int:
    acc = accuracy_from_args(args)
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise UsageError(f"unknown method(s): {bad}")
    values = sweep_grid(args.variable, args.min, args.max, args.count, args.scale)
    rows, failures = run_sweep(values, args.variable, _floats(args.u), methods,
                               KernelVariant.parse(args.variant), acc, _load_model(args.model))
    if args.output:
        with open(args.output, "w", newline="") as fh:
            write_table(rows, args.format, fh)
    else:
        write_table(rows, args.format, out)
    return 2 if failures else 0


def cmd_fit(args, out) -> int:
    acc = accuracy_from_args(args)
    ys = fitting.log_grid(args.min, args.max, args.count)
    vu = [] if args.validate_u.strip().lower() == "none" else _floats(args.validate_u)
    cache: dict = {}

    def samples(u):
        if u not in cache:
            cache[u] = fitting.sample_phi(u, ys, acc)
        return cache[u]

    status = 0
    if args.validate_only:
        if not args.model:
            raise UsageError("--validate-only needs --model")
        model = _load_model(args.model)
        result = {"order": model.order, "nu": list(model.nu), "mu": list(model.mu)}
    else:
        try:
            report = fitting.fit_rational_model(samples(args.u_star), args.n)
        except fitting.FitError as exc:
            report, status = exc.report, 2
        model = report.model
        result = report.to_dict()
        out.write(f"achieved eps = {fmt(report.achieved_eps)}\n")
    if vu:
        dev = {fmt(u): _num(fitting.max_deviation(model, samples(u))) for u in vu}
        result["validation"] = {"grid": fitting.describe_grid(ys), "max_deviation": dev,
                                "overall": max(dev.values())}
        out.write(f"validation max deviation = {fmt(result['validation']['overall'])}\n")
    text = json.dumps(result, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)
    return status


def _check(out, name: str, ok: bool, measured: str) -> bool:
    out.write(f"{'PASS' if ok else 'FAIL'}  {name}: {measured}\n")
    return ok


def _metal_checks(acc, quick, out) -> list[bool]:
    from scipy.special import ive

    res = []
    worst = 0.0
    for k, kp, R in [(0.3, 0.7, 1.0), (5.0, 6.0, 2.0), (40.0, 45.0, 1.5)]:
        ref = ive(0, 2 * R * math.sqrt(k * kp)) * math.exp(2 * R * math.sqrt(k * kp) - R * (k + kp))
        ref -= math.exp(-R * (k + kp))
        worst = max(worst, abs(mode_sum_series(0, k, kp, R, KernelVariant.METAL) / ref - 1))
    res.append(_check(out, "metal m=0 kernel vs scaled Bessel", worst <= 1e-8, f"{worst:.2e}"))
    pts = [(1.1, 0.0), (2.0, 0.25)] if quick else [(1.01, 0.0), (1.1, 0.04), (2.0, 0.1),
                                                   (11.0, 0.25)]
    ok = True
    for y, u in pts:
        red = geometry.from_reduced(y, u)
        fm = scattering.free_energy_exact(red, KernelVariant.METAL, acc).f
        fd = scattering.free_energy_exact(red, KernelVariant.DIELECTRIC, acc).f
        ok &= fm > fd
    res.append(_check(out, "metal exceeds dielectric", ok, f"{len(pts)} points"))
    return res


def cmd_validate(args, out) -> int:
    acc = accuracy_from_args(args)
    variant = KernelVariant.parse(args.variant)
    noest = replace(acc, estimate_error=False)
    if variant is KernelVariant.METAL:
        results = _metal_checks(noest, args.quick, out)
        return 0 if all(results) else 2
    results = []
    z3 = analytic.ZETA3
    grid = [(1e-1, 0.1), (1.0, 0.25)] if args.quick else [
        (d, u) for d in (1e-2, 1e-1, 1.0, 10.0) for u in (0.04, 0.1, 0.25)]
    worst = 0.0
    for d, u in grid:
        red = geometry.from_reduced(1 + d, u)
        tr = scattering.free_energy_exact(red, variant, noest, rmax=1).round_trips[0]
        worst = max(worst, abs(tr / analytic.single_round_trip(1 + d, u) - 1))
    results.append(_check(out, "trace vs closed form", worst <= 1e-6, f"{worst:.2e}"))

    y = 50.0
    for u, c in ((0.0, 8.0), (0.25, 32.0 / 3.0)):
        f = scattering.free_energy_exact(geometry.from_reduced(y, u), variant, noest).f
        r = f * c * y ** 3
        results.append(_check(out, f"large distance u={u:g}", abs(r - 1) <= 0.01, f"{r:.5f}"))
    for u in (0.04, 0.1, 0.25):
        r = analytic.single_round_trip(100.0, u) / analytic.single_round_trip(100.0, 0.0)
        results.append(_check(out, f"factor 3/4 u={u:g}", abs(r / 0.75 - 1) <= 0.01, f"{r:.5f}"))
    for y in (1.01, 2.0, 10.0):
        lo = analytic.single_round_trip(y, analytic.U_SWITCH * (1 - 1e-9))
        hi = analytic.single_round_trip(y, analytic.U_SWITCH)
        d = abs(hi - lo) / hi
        results.append(_check(out, f"small-u branch continuity y={y:g}", d <= 1e-8, f"{d:.2e}"))

    d_pfa = 1e-2 if args.quick else 1e-3
    res = scattering.free_energy_exact(geometry.from_reduced(1 + d_pfa, 0.25), variant, noest,
                                       rmax=3)
    r = res.f * 8 * d_pfa / z3
    results.append(_check(out, f"proximity force y-1={d_pfa:g}", abs(r - 1) <= 0.01, f"{r:.5f}"))
    f1, f2, f3 = res.round_trips
    for rr, fr in ((2, f2), (3, f3)):
        q = fr * rr ** 3 / f1
        results.append(_check(out, f"round trip scaling r={rr} y-1={d_pfa:g}",
                              abs(q - 1) <= 0.02, f"{q:.5f}"))

    ys = fitting.log_grid(1e-3, 1e2, 6 if args.quick else 21)
    us = (0.0, 0.25) if args.quick else DEFAULT_U
    samples = {u: fitting.sample_phi(u, ys, noest if args.quick else acc, variant) for u in us}
    bound = all(1.0 <= s.phi <= z3 * (1 + 1e-6) for u in us for s in samples[u])
    results.append(_check(out, "phi within [1, zeta(3)]", bound, f"{len(ys) * len(us)} points"))
    dev = max(fitting.max_deviation(TABLE_I, samples[u]) for u in us)
    results.append(_check(out, "shipped model deviation", dev <= 1.3e-3, f"{dev:.2e}"))
    p_lo, p_hi = samples[us[-1]][0].phi, samples[us[-1]][-1].phi
    results.append(_check(out, "phi at y-1=1e-3", 1.19 <= p_lo <= 1.21, f"{p_lo:.5f}"))
    results.append(_check(out, "phi at y-1=1e2", 1.0 <= p_hi <= 1.001, f"{p_hi:.6f}"))
    mono = all(a.phi > b.phi for u in us for a, b in zip(samples[u], samples[u][1:]))
    results.append(_check(out, "phi decreasing in y", mono, ""))
    out.write(f"{sum(results)}/{len(results)} checks passed\n")
    return 0 if all(results) else 2


COMMANDS = {"eval": cmd_eval, "sweep": cmd_sweep, "fit": cmd_fit, "validate": cmd_validate}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, geometry.GeometryError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except (AccuracyError, ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
