"""Command-line front end: ``mm1ps {density,table1,tail,simulate,compare}``.

Results go to standard output as CSV (default) or JSON, diagnostics to
standard error. Floats are written with ``repr`` so output is exact,
deterministic and round-trips through a CSV parser.

Exit codes: 0 success, 1 tolerance failure, 2 usage or domain error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import regimes_fixed as rf
from . import regimes_heavy as rh
from .compare import SUITES, run_suite
from .exact import atom_mass, boundary_density, invert_density, mean_sojourn
from .model import DensityValue, DomainError, MM1PSError, ModelParams
from .simulator import SimConfig, empirical_density, sample_sojourn
from .singularities import dominant_singularity, table1_reference

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DENSITY_COLUMNS = ("t", "x", "rho", "method", "value", "atom", "err_est", "regime")
FIXED_METHODS = ("T1-case1", "T1-case2", "T1-case3", "T1-case4")
HEAVY_METHODS = tuple(f"T2-case{k}" for k in range(1, 7))
METHODS = ("exact", "auto", *FIXED_METHODS, *HEAVY_METHODS, "match")
TABLE1_TOL = 1.5e-4


class UsageError(Exception):
    pass


# -- formatting ----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_records(records: list[dict], columns, fmt: str, out) -> None:
    """Write ``records`` as CSV (header + rows) or a JSON array of objects."""
    if fmt == "json":
        data = [{c: _json_value(r.get(c)) for c in columns} for r in records]
        out.write(json.dumps(data, indent=1) + "\n")
        return
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([_fmt(r.get(c)) for c in columns])


def parse_grid(spec: str) -> list[float]:
    """``"start:stop:count"`` to ``count`` equally spaced points."""
    try:
        a, b, n = spec.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise UsageError(f"grid must look like start:stop:count, got {spec!r}") from None
    if n < 1 or not (math.isfinite(a) and math.isfinite(b)):
        raise UsageError(f"bad grid {spec!r}")
    return [float(v) for v in np.linspace(a, b, n)]


def parse_list(spec: str) -> list[float]:
    try:
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {spec!r}") from None


# -- density -------------------------------------------------------------------------


def _exact_point(t, x, p) -> DensityValue:
    if t == x:
        return DensityValue(boundary_density(x, p), atom=atom_mass(x, p), regime="exact-inversion")
    return invert_density(t, x, p)


def evaluate(t: float, x: float, rho: float, method: str, form: str | None = None) -> DensityValue:
    """Density of the sojourn time at ``(t, x, rho)`` by the named method.

    Heavy-traffic methods take ``eps = 1 - rho`` and rescale ``(t, x)``
    to their own variables.
    """
    p = ModelParams(rho)
    if not (math.isfinite(t) and math.isfinite(x) and x > 0):
        raise DomainError(f"need finite t and x > 0, got t={t}, x={x}")
    if t < x:
        raise DomainError(f"the sojourn time of a job of size {x} is at least {x}; got t={t}")
    if method == "auto":
        method = "exact" if t == x else rf.classify_regime(t, x, p)
    if method == "exact":
        return _exact_point(t, x, p)
    if method in FIXED_METHODS:
        if method == "T1-case3":
            return rf.regime3_series(t, x, p, form)
        return rf.EVALUATORS[method](t, x, p)
    if method == "match":
        return rf.matching_formula(t, x, p)
    s = rh.HeavyScales.from_tx(t, x, p.epsilon)
    if method == "T2-case1":
        return rh.ht_case1(t, x, s.eps)
    if method == "T2-case2":
        return rh.ht_case2(s.T, x, s.eps)
    if method == "T2-case3":
        return rh.ht_case3(s.X, s.T_star, s.eps)
    if method == "T2-case4":
        return rh.ht_case4(s.T, s.X, s.eps)
    if method == "T2-case5":
        return rh.ht_case5(s.T, s.Z, s.eps, form or "direct")
    if method == "T2-case6":
        return rh.ht_case6(s.Theta, s.X, s.eps, form or "integral")
    raise DomainError(f"unknown method {method!r}")


def _density_row(job):
    t, x, rho, method, form = job
    try:
        dv = evaluate(t, x, rho, method, form)
    except DomainError as exc:
        return ("domain", str(exc))
    except MM1PSError as exc:
        return ("numeric", f"{method}: {exc}")
    return ("ok", {
        "t": t, "x": x, "rho": rho, "method": method,
        "value": float(dv.continuous), "atom": float(dv.atom), "err_est": float(dv.err_est), "regime": dv.regime,
    })


def cmd_density(args, out) -> int:
    if (args.t is None) == (args.t_grid is None):
        raise UsageError("give exactly one of --t and --t-grid")
    ts = [args.t] if args.t is not None else parse_grid(args.t_grid)
    ModelParams(args.rho)
    jobs = [(t, args.x, args.rho, args.method, args.form) for t in ts]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_density_row, jobs))
    else:
        results = [_density_row(j) for j in jobs]
    for kind, payload in results:
        if kind == "domain":
            raise DomainError(payload)
        if kind == "numeric":
            print(f"numeric failure in {payload}", file=sys.stderr)
            return EXIT_NUMERIC
    write_records([r for _, r in results], DENSITY_COLUMNS, args.format, out)
    return EXIT_OK


# -- table 1 -------------------------------------------------------------------------

TABLE1_COLUMNS = ("rho", "x", "u", "v", "u_ref", "v_ref", "abs_err", "branch", "status")


def cmd_table1(args, out) -> int:
    ref = {(r, x): (u, v) for r, x, u, v in table1_reference()}
    rhos = parse_list(args.rho_list) if args.rho_list else sorted({k[0] for k in ref})
    xs = parse_list(args.x_list) if args.x_list else sorted({k[1] for k in ref})
    records, worst = [], EXIT_OK
    for rho in rhos:
        p = ModelParams(rho)
        for x in xs:
            rec = {"rho": rho, "x": x}
            try:
                s = dominant_singularity(x, p)
            except MM1PSError as exc:
                print(f"rho={rho} x={x}: {exc}", file=sys.stderr)
                rec["status"] = "error"
                records.append(rec)
                worst = EXIT_NUMERIC
                continue
            rec.update(u=s.u, v=s.v, branch=s.branch, status="computed")
            if (rho, x) in ref:
                u_ref, v_ref = ref[(rho, x)]
                err = max(abs(s.u - u_ref), abs(s.v - v_ref))
                ok = err <= args.tol
                rec.update(u_ref=u_ref, v_ref=v_ref, abs_err=err, status="pass" if ok else "fail")
                if not ok and worst == EXIT_OK:
                    worst = EXIT_TOLERANCE
            records.append(rec)
    write_records(records, TABLE1_COLUMNS, args.format, out)
    return worst


# -- tail ----------------------------------------------------------------------------


def cmd_tail(args, out) -> int:
    if (args.rho is None) == (args.eps is None):
        raise UsageError("give exactly one of --rho and --eps")
    if args.t is not None and not args.t > 0:
        raise DomainError(f"t must be positive, got {args.t}")
    if args.rho is not None:
        p = ModelParams(args.rho)
        tc = rf.tail_constants(p)
        rec = {"rho": p.rho, "A": tc.A, "B": tc.B, "C_star": tc.C_star, "ros_factor": tc.ros_factor}
        cols = ["rho", "A", "B", "C_star", "ros_factor"]
        if args.t is not None:
            rec.update(t=args.t, density=rf.flatto_tail(args.t, p)[1])
            cols += ["t", "density"]
    else:
        mt = rh.morrison_tail_constants(args.eps)
        rec = {"eps": args.eps, "alpha_star": mt.alpha_star, "beta_star": mt.beta_star,
               "gamma_star": mt.gamma_star, "decay_rate": mt.decay_rate}
        cols = ["eps", "alpha_star", "beta_star", "gamma_star", "decay_rate"]
        if args.t is not None:
            rec.update(t=args.t, tail_probability=mt.tail_probability(args.t))
            cols += ["t", "tail_probability"]
    write_records([rec], cols, args.format, out)
    return EXIT_OK


# -- simulate ------------------------------------------------------------------------

SIM_COLUMNS = ("rho", "x", "reps", "seed", "mean", "ci_halfwidth", "variance",
               "mean_exact", "atom_fraction", "atom_exact")
SIM_DENSITY_COLUMNS = ("t", "estimate", "stderr")


def cmd_simulate(args, out) -> int:
    cfg = SimConfig(args.rho, args.x, args.reps, args.seed)
    grid = parse_grid(args.grid) if args.grid else None
    sample = sample_sojourn(cfg)
    p = ModelParams(args.rho)
    summary = {
        "rho": args.rho, "x": args.x, "reps": args.reps, "seed": args.seed,
        "mean": sample.mean, "ci_halfwidth": sample.ci_halfwidth, "variance": sample.variance,
        "mean_exact": mean_sojourn(args.x, p), "atom_fraction": sample.atom_fraction,
        "atom_exact": atom_mass(args.x, p) if args.x > 0 else 1.0,
    }
    dens = []
    if grid is not None:
        dens = [{"t": t, "estimate": e, "stderr": s} for t, e, s in empirical_density(sample, grid, args.bandwidth)]
    if args.format == "json":
        data = {"summary": {k: _json_value(summary[k]) for k in SIM_COLUMNS},
                "density": [{k: _json_value(d[k]) for k in SIM_DENSITY_COLUMNS} for d in dens]}
        out.write(json.dumps(data, indent=1) + "\n")
    else:
        write_records([summary], SIM_COLUMNS, "csv", out)
        if grid is not None:
            out.write("\n")
            write_records(dens, SIM_DENSITY_COLUMNS, "csv", out)
    return EXIT_OK


# -- compare -------------------------------------------------------------------------

COMPARE_COLUMNS = ("suite", "name", "point", "observed", "tolerance", "status", "oracle")


def cmd_compare(args, out) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    records = []
    for n in names:
        for check in SUITES[n]:
            try:
                records.append(check().as_dict())
            except MM1PSError as exc:
                print(f"{n}/{check.__name__}: {exc}", file=sys.stderr)
                records.append({"suite": n, "name": check.__name__.lstrip("_"), "observed": math.nan,
                                "status": "error", "oracle": type(exc).__name__})
    write_records(records, COMPARE_COLUMNS, args.format, out)
    return EXIT_OK if all(r["status"] == "pass" for r in records) else EXIT_TOLERANCE


# -- entry point ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mm1ps", description="Sojourn-time densities of the M/M/1-PS queue.")
    sub = ap.add_subparsers(dest="command", required=True)

    def fmt(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    d = sub.add_parser("density", help="conditional sojourn-time density p(t|x)")
    d.add_argument("--rho", type=float, required=True)
    d.add_argument("--x", type=float, required=True)
    d.add_argument("--t", type=float)
    d.add_argument("--t-grid", help="start:stop:count")
    d.add_argument("--method", choices=METHODS, default="exact")
    d.add_argument("--form", help="series form for T1-case3 / T2-case5 / T2-case6")
    d.add_argument("--jobs", type=int, default=1, help="worker processes for grid evaluation")
    fmt(d)

    t1 = sub.add_parser("table1", help="dominant singularities against the stored table")
    t1.add_argument("--rho-list")
    t1.add_argument("--x-list")
    t1.add_argument("--tol", type=float, default=TABLE1_TOL)
    fmt(t1)

    tl = sub.add_parser("tail", help="large-t tail constants")
    tl.add_argument("--rho", type=float)
    tl.add_argument("--eps", type=float)
    tl.add_argument("--t", type=float)
    fmt(tl)

    sm = sub.add_parser("simulate", help="Monte Carlo sojourn times")
    sm.add_argument("--rho", type=float, required=True)
    sm.add_argument("--x", type=float, required=True)
    sm.add_argument("--reps", type=int, default=100_000)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--grid", help="start:stop:count for an empirical density")
    sm.add_argument("--bandwidth", type=float)
    fmt(sm)

    cp = sub.add_parser("compare", help="cross-oracle comparison matrix")
    cp.add_argument("--suite", choices=(*SUITES, "all"), default="all")
    fmt(cp)
    return ap


COMMANDS = {
    "density": cmd_density,
    "table1": cmd_table1,
    "tail": cmd_tail,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
}


def main(argv=None, out=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = out if out is not None else sys.stdout
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf)
    except (UsageError, DomainError) as exc:
        print(f"mm1ps {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MM1PSError as exc:
        print(f"mm1ps {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
