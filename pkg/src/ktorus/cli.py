"""Command-line front end: metric configs in, analysis artifacts out.

A metric config is a JSON object with fields

    lattice     {"e1": [x, y], "e2": [x, y]}     (optional, unit square)
    mu_fourier  [{"k": [k1, k2], "re": r, "im": i}, ...]
    grid_n      integer                          (optional)
    tolerances  {...}                            (optional overrides)

Only conformal metrics e^{2 mu} (dx^2 + dy^2) are representable; any other
field in the config is rejected.  Hermitian closure is applied to the
coefficient table, so only one member of each (k, -k) pair needs listing.
grid_n below four times the maximum frequency degree is raised with a
warning.  All JSON output is canonical (sorted keys, 17 significant digits,
no timestamps): identical inputs give byte-identical files.
"""

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .metric import Lattice, ConformalFactor, default_grid_n
from .geodesics import (DEFAULT_CLASSES, find_closed_geodesic, orbit_to_csv,
                        ray_integral_pair)
from .solver import kernel_delta_pd
from .rank3 import (delta_T_circulation, extract_isolines, isoline_integral,
                    lambda_form, mean_value_check)
from .pipeline import run_full, report_to_json, _jsonable


class ConfigError(ValueError):
    """Malformed metric config; the message names the offending field."""


CONFIG_FIELDS = {"lattice", "mu_fourier", "grid_n", "tolerances"}
TOLERANCE_FIELDS = {"transport_threshold", "potentiality_eps",
                    "ratio_margin_factor"}


@dataclass
class MetricConfig:
    cf: ConformalFactor
    grid_n: int          # resolved (possibly raised) grid size
    tolerances: dict
    path: str


def _fail(path, field, msg):
    raise ConfigError(f"{path}: field '{field}': {msg}")


def _real_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) \
        and np.isfinite(v)


def load_config(path):
    """Parse and validate a metric config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(raw) - CONFIG_FIELDS)
    if unknown:
        raise ConfigError(
            f"{path}: unknown field(s) {unknown}; the metric is always "
            "conformal, e^(2 mu)(dx^2 + dy^2), so only "
            f"{sorted(CONFIG_FIELDS)} are accepted")

    lattice = Lattice()
    if "lattice" in raw:
        lat = raw["lattice"]
        if not isinstance(lat, dict) or set(lat) != {"e1", "e2"}:
            _fail(path, "lattice", "must be an object with keys e1, e2")
        vecs = []
        for name in ("e1", "e2"):
            v = lat[name]
            if (not isinstance(v, list) or len(v) != 2
                    or not all(_real_number(x) for x in v)):
                _fail(path, f"lattice.{name}",
                      "must be a pair of finite numbers")
            vecs.append(v)
        try:
            lattice = Lattice(*vecs)
        except ValueError as exc:
            _fail(path, "lattice", str(exc))

    modes = raw.get("mu_fourier", [])
    if not isinstance(modes, list):
        _fail(path, "mu_fourier", "must be a list")
    coeffs = {}
    for i, entry in enumerate(modes):
        where = f"mu_fourier[{i}]"
        if not isinstance(entry, dict):
            _fail(path, where, "must be an object")
        extra = sorted(set(entry) - {"k", "re", "im"})
        if extra:
            _fail(path, where, f"unknown key(s) {extra}")
        k = entry.get("k")
        if (not isinstance(k, list) or len(k) != 2
                or not all(isinstance(x, int) and not isinstance(x, bool)
                           for x in k)):
            _fail(path, f"{where}.k", "must be a pair of integers")
        re = entry.get("re", 0.0)
        im = entry.get("im", 0.0)
        if not (_real_number(re) and _real_number(im)):
            _fail(path, f"{where}.re/im", "must be finite numbers")
        key = (k[0], k[1])
        c = complex(re, im)
        if key in coeffs and abs(coeffs[key] - c) > 1e-13 * (1 + abs(c)):
            _fail(path, where, f"duplicate mode {key} with a different value")
        coeffs[key] = c
    try:
        cf = ConformalFactor(lattice, coeffs)
    except ValueError as exc:
        _fail(path, "mu_fourier", str(exc))

    requested = raw.get("grid_n")
    if requested is not None:
        if not isinstance(requested, int) or isinstance(requested, bool) \
                or requested < 1:
            _fail(path, "grid_n", "must be a positive integer")
    n = max(4, default_grid_n(cf, requested))
    if requested is not None and n > requested:
        print(f"warning: grid_n raised from {requested} to {n} "
              f"(needs >= 4 * max degree {cf.max_degree})", file=sys.stderr)

    tols = raw.get("tolerances", {})
    if not isinstance(tols, dict):
        _fail(path, "tolerances", "must be an object")
    bad = sorted(set(tols) - TOLERANCE_FIELDS)
    if bad:
        _fail(path, "tolerances",
              f"unknown key(s) {bad}; known: {sorted(TOLERANCE_FIELDS)}")
    for k, v in tols.items():
        if not _real_number(v) or v <= 0:
            _fail(path, f"tolerances.{k}", "must be a positive number")

    return MetricConfig(cf=cf, grid_n=n, tolerances=dict(tols), path=path)


# -- small output helpers ----------------------------------------------------

def _g17(x):
    return f"{float(x):.17g}"


def _write_json(path, obj):
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"
    with open(path, "w") as fh:
        fh.write(text)


def _parse_pair(text, flag, cast):
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{flag} expects two comma-separated values")
    try:
        return cast(parts[0]), cast(parts[1])
    except ValueError:
        raise ConfigError(f"{flag}: could not parse {text!r}")


# -- commands ----------------------------------------------------------------

def cmd_analyze(args):
    cfg = load_config(args.config)
    if args.ranks:
        try:
            ranks = tuple(int(r) for r in args.ranks.split(","))
        except ValueError:
            raise ConfigError(f"--ranks: could not parse {args.ranks!r}")
        if any(r < 1 for r in ranks):
            raise ConfigError("--ranks: ranks must be >= 1")
    else:
        ranks = (1, 2, 3, 4)
    kw = {}
    if "transport_threshold" in cfg.tolerances:
        kw["threshold"] = cfg.tolerances["transport_threshold"]
    report = run_full(cfg.cf, ranks=ranks, n=cfg.grid_n, **kw)
    text = report_to_json(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
        for m in sorted(report.per_rank):
            print(f"rank {m}: {report.per_rank[m].verdict}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_geodesics(args):
    cfg = load_config(args.config)
    if args.cls:
        classes = [_parse_pair(args.cls, "--class", int)]
    else:
        classes = list(DEFAULT_CLASSES)
    out = args.out or "geodesics"
    rows = []
    for p, q in classes:
        orbit = find_closed_geodesic(cfg.cf, (p, q))
        orbit_path = f"{out}_orbit_{p}_{q}.csv"
        orbit_to_csv(orbit, orbit_path)
        print(f"wrote {orbit_path} (period {orbit.period:.6g}, closure "
              f"residual {orbit.closure_residual:.2e})")
        for m in range(5):
            pair = ray_integral_pair(orbit, m)
            rows.append([p, q, m, _g17(pair.I_num), _g17(pair.I_den),
                         _g17(pair.richardson_error[0]),
                         _g17(pair.richardson_error[1]),
                         _g17(orbit.period)])
    table = f"{out}_ray_integrals.csv"
    with open(table, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "q", "m", "I1", "I2", "err1", "err2", "period"])
        w.writerows(rows)
    print(f"wrote {table}")
    return 0


def cmd_kernel(args):
    cfg = load_config(args.config)
    m = args.rank
    if m < 1:
        raise ConfigError("--rank must be >= 1")
    # dense SVD certificate: a small odd grid resolves the analytic fields
    n = max(17, 4 * cfg.cf.max_degree + 1)
    if n % 2 == 0:
        n += 1
    if n > 33:
        print(f"warning: kernel grid capped at 33 (degree "
              f"{cfg.cf.max_degree} metric)", file=sys.stderr)
        n = 33
    rep = kernel_delta_pd(cfg.cf, m, n=n)
    out = args.out or "kernel"
    mg = cfg.cf.grid(rep.n)
    for i, f in enumerate(rep.fields, start=1):
        fpath = f"{out}_field{i}.csv"
        with open(fpath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "a", "b"])
            for r in range(rep.n):
                for s in range(rep.n):
                    w.writerow([_g17(mg.X[r, s]), _g17(mg.Y[r, s]),
                                _g17(f.a[r, s]), _g17(f.b[r, s])])
        print(f"wrote {fpath}")
    sv = rep.singular_values
    _write_json(f"{out}_svd.json", {
        "rank": rep.m, "grid_n": rep.n,
        "smallest_singular_values": sv[:6],
        "largest_singular_value": sv[-1],
        "kernel_dimension_estimate": int(np.sum(sv <= 1e-10 * sv[-1])),
        "subspace_sin": rep.subspace_sin,
        "analytic_field_residual": rep.pd_residual,
    })
    print(f"wrote {out}_svd.json")
    return 0


def cmd_isolines(args):
    cfg = load_config(args.config)
    c = _parse_pair(args.c, "--c", float) if args.c else (1.0, 0.0)
    mg = cfg.cf.grid(cfg.grid_n)
    kmin, kmax = float(mg.K.min()), float(mg.K.max())
    if args.levels:
        try:
            levels = [float(s) for s in args.levels.split(",")]
        except ValueError:
            raise ConfigError(f"--levels: could not parse {args.levels!r}")
    else:
        if kmax - kmin <= 1e-14 * (1 + abs(kmax)):
            raise ConfigError("curvature is constant; pass --levels "
                              "explicitly if you want empty output")
        levels = list(np.linspace(kmin, kmax, 7)[1:-1])
    out = args.out or "isolines"
    poly_path = f"{out}_polylines.csv"
    int_path = f"{out}_integrals.csv"
    n_iso = max(cfg.grid_n, 192)
    with open(poly_path, "w", newline="") as pf, \
            open(int_path, "w", newline="") as intf:
        pw = csv.writer(pf)
        iw = csv.writer(intf)
        pw.writerow(["level", "component", "closed", "t", "x", "y"])
        iw.writerow(["level", "component", "closed", "p", "q", "duration",
                     "source_integral", "boundary_circulation"])
        for level in levels:
            if not (kmin < level < kmax):
                print(f"warning: level {level:.6g} outside curvature range "
                      f"[{kmin:.6g}, {kmax:.6g}], skipped", file=sys.stderr)
                continue
            curves = extract_isolines(cfg.cf, level, n=n_iso)
            for ci, curve in enumerate(curves):
                for t, (x, y) in zip(curve.ts, curve.points):
                    pw.writerow([_g17(level), ci, int(curve.closed),
                                 _g17(t), _g17(x), _g17(y)])
                res = isoline_integral(curve, c, cfg.cf)
                circ = delta_T_circulation(curve, c, cfg.cf) \
                    if curve.closed else ""
                iw.writerow([_g17(level), ci, int(curve.closed),
                             curve.lift_class[0], curve.lift_class[1],
                             _g17(curve.duration), _g17(res.value),
                             _g17(circ) if circ != "" else ""])
    print(f"wrote {poly_path}")
    print(f"wrote {int_path}")
    return 0


def cmd_lambda(args):
    cfg = load_config(args.config)
    mg = cfg.cf.grid(cfg.grid_n)
    lf = lambda_form(mg)
    out = args.out or "lambda"
    grid_path = f"{out}_grids.csv"
    with open(grid_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "L1", "L2", "L1_complex_route",
                    "L2_complex_route"])
        Lc = lf.combination()
        for r in range(mg.n):
            for s in range(mg.n):
                w.writerow([_g17(mg.X[r, s]), _g17(mg.Y[r, s]),
                            _g17(lf.L1[r, s]), _g17(lf.L2[r, s]),
                            _g17(Lc[0][r, s]), _g17(Lc[1][r, s])])
    m1, m2 = mean_value_check(cfg.cf, mg.n)
    sup = float(max(np.max(np.abs(lf.L1)), np.max(np.abs(lf.L2))))
    _write_json(f"{out}_report.json", {
        "grid_n": mg.n,
        "sup_norm": sup,
        "route_discrepancy": lf.route_discrepancy,
        "imag_residual": lf.imag_residual,
        "mean_values": [m1, m2],
        "mean_value_bound": 1e-9 * mg.area * sup,
    })
    print(f"wrote {grid_path}")
    print(f"wrote {out}_report.json")
    return 0


# -- dispatch ----------------------------------------------------------------

def _apply_thread_cap():
    cap = os.environ.get("KT_THREADS")
    if not cap:
        return
    try:
        k = max(1, int(cap))
    except ValueError:
        print(f"warning: ignoring non-integer KT_THREADS={cap!r}",
              file=sys.stderr)
        return
    try:
        import threadpoolctl
        threadpoolctl.threadpool_limits(limits=k)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(k))


def build_parser():
    p = argparse.ArgumentParser(
        prog="ktorus",
        description="Obstruction analysis for Killing tensor fields on "
                    "conformal 2-torus metrics")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="full per-rank obstruction report")
    a.add_argument("config")
    a.add_argument("--ranks", help="comma-separated ranks (default 1,2,3,4)")
    a.add_argument("--out", help="report JSON path (default: stdout)")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("geodesics",
                       help="closed geodesics and ray integral tables")
    g.add_argument("config")
    g.add_argument("--class", dest="cls", metavar="p,q",
                   help="single homotopy class (default: standard menu)")
    g.add_argument("--out", help="output prefix (default: geodesics)")
    g.set_defaults(func=cmd_geodesics)

    k = sub.add_parser("kernel",
                       help="divergence-kernel certificate at one rank")
    k.add_argument("config")
    k.add_argument("--rank", type=int, required=True)
    k.add_argument("--out", help="output prefix (default: kernel)")
    k.set_defaults(func=cmd_kernel)

    i = sub.add_parser("isolines",
                       help="curvature isolines and transport integrals")
    i.add_argument("config")
    i.add_argument("--levels", help="comma-separated curvature levels")
    i.add_argument("--c", metavar="c1,c2",
                   help="direction components (default 1,0)")
    i.add_argument("--out", help="output prefix (default: isolines)")
    i.set_defaults(func=cmd_isolines)

    l = sub.add_parser("lambda",
                       help="transport source grids, both routes, and "
                            "mean values")
    l.add_argument("config")
    l.add_argument("--out", help="output prefix (default: lambda)")
    l.set_defaults(func=cmd_lambda)
    return p


def main(argv=None):
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: diagnostic, nonzero exit
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
