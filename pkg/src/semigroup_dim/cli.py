"""Command-line front end.

Exit codes: 0 success, 1 usage or config error, 2 checker warnings under
``--strict``, 3 numeric failure.  Every output file starts with a metadata
header (tool version, config sha256); nothing in it depends on ``--threads``.
Set ``SEMIGROUP_DIM_LOG`` (DEBUG, INFO, WARNING, ...) for log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import attracting_cloud, expansion_estimate, hyperbolicity_check, osc_check, postcritical_cloud
from .config import ConfigError, SystemConfig, load_config
from .julia import SeedSelectionError, cell_centers, find_seed, julia_cloud, render, write_pgm, write_points_csv
from .measure import box_dimension, conformal_measure, regularity_audit, separating_overlap
from .poincare import BasePointError, critical_exponent, scan_series, word_coincidences
from .sphere import RootSolverError
from .thermo import (
    CriticalPointError,
    DegenerateSystemError,
    bowen_dimension,
    default_depth,
    entropy_lyapunov,
    pressure_curve,
)

log = logging.getLogger("semigroup_dim")

EXIT_OK, EXIT_CONFIG, EXIT_WARN, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (
    RootSolverError,
    DegenerateSystemError,
    CriticalPointError,
    SeedSelectionError,
    BasePointError,
    FloatingPointError,
    ValueError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class Run:
    """Resolved settings shared by every subcommand."""

    def __init__(self, args, cfg: SystemConfig):
        self.args = args
        self.cfg = cfg
        self.gs = cfg.system()
        self.seed = cfg.rng_seed if args.seed is None else args.seed
        self.threads = max(1, args.threads)
        self.depth = args.depth or cfg.depth or default_depth(self.gs)
        self.out = Path(args.out or cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.warnings = []
        self._x = cfg.base_point

    @property
    def x(self):
        if self._x is None:
            self._x = find_seed(self.gs)[0]
        return self._x

    def header(self):
        return [
            f"semigroup_dim {__version__}",
            f"config_sha256 {self.cfg.sha256()}",
            f"system {self.cfg.name or '-'}",
        ]

    def meta(self):
        return {
            "tool": "semigroup_dim",
            "version": __version__,
            "config_sha256": self.cfg.sha256(),
            "config": self.cfg.to_json(),
            "depth": self.depth,
            "rng_seed": self.seed,
            "base_point": [self.x.real, self.x.imag],
        }

    def warn(self, msg):
        self.warnings.append(msg)
        print(f"warning: {msg}", file=sys.stderr)

    def write_json(self, name, payload):
        path = self.out / name
        doc = {"meta": self.meta(), **payload}
        with open(path, "w", newline="\n") as fh:
            fh.write(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return path


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def run_checks(run: Run):
    """Expansion, hyperbolicity, attracting set, word coincidences and (if configured) OSC."""
    gs = run.gs
    cloud = julia_cloud(gs, count=max(run.cfg.cloud_count, 1000), rng_seed=run.seed, threads=run.threads)
    exp = expansion_estimate(gs, cloud)
    if not exp.verdict:
        run.warn(f"expansion estimate does not confirm expanding (lambda = {exp.lam:.4f})")
    pc = postcritical_cloud(gs)
    gap, hyper = hyperbolicity_check(cloud, pc)
    if not hyper:
        run.warn(f"postcritical approximation within {gap:.3g} of the Julia cloud")
    ac = attracting_cloud(gs)
    coincide = word_coincidences(gs)
    report = {
        "expansion": exp.to_json(),
        "hyperbolicity": {"min_chordal_gap": gap, "verdict": "pass" if hyper else "fail"},
        "postcritical_points": [[z.real, z.imag] for z in pc.points],
        "attracting_points": len(ac),
        "word_coincidences": [list(map(list, p)) for p in coincide[:20]],
    }
    if run.cfg.open_set is not None:
        osc = osc_check(gs, run.cfg.open_set, rng_seed=run.seed)
        report["open_set_condition"] = osc
        if osc["verdict"] != "pass":
            run.warn("open set condition fails for the configured open set")
    else:
        report["open_set_condition"] = None
        run.warn("no open set configured: open set condition not checked, dim_H = delta not asserted")
    return report, exp


def cmd_dim(run: Run):
    checks, exp = run_checks(run)
    res = bowen_dimension(run.gs, run.x, run.depth, expansion=exp, threads=run.threads)
    lyap, h = entropy_lyapunov(run.gs, res.delta, run.x, run.depth, threads=run.threads)
    logS = math.log(run.gs.total_degree)
    bound_ok = res.delta <= res.upper_bound + 0.05
    if not bound_ok:
        run.warn(f"delta {res.delta:.4f} exceeds log(sum deg)/log(lambda) = {res.upper_bound:.4f}")
    if h > logS + 0.05:
        run.warn(f"entropy {h:.4f} exceeds log(sum deg) = {logS:.4f}")
    payload = {
        "dimension": res.to_json(),
        "lyapunov": lyap,
        "entropy": h,
        "log_total_degree": logS,
        "upper_bound_ok": bound_ok,
        "checks": checks,
    }
    run.write_json("dim.json", payload)
    print(f"system      {run.cfg.name or '-'}")
    print(f"delta       {res.delta:.8f}")
    print(f"depth       {run.depth} (previous depth {res.diagnostics['delta_prev_depth']:.8f})")
    print(f"extrapol.   {res.diagnostics['delta_extrapolated']:.8f}")
    print(f"upper bound {res.upper_bound:.6f}  (log sum deg / log lambda)")
    print(f"lyapunov    {lyap:.6f}   entropy {h:.6f} <= {logS:.6f}")


def cmd_pressure(run: Run):
    grid = _floats(run.args.t)
    curve = pressure_curve(run.gs, grid, run.x, run.depth, threads=run.threads)
    P = curve.P
    decreasing = bool(np.all(np.diff(P) < 0))
    if not decreasing:
        run.warn("pressure estimate is not strictly decreasing across the grid")
    path = run.out / "pressure.csv"
    with open(path, "w", newline="\n") as fh:
        for c in run.header() + [f"decreasing {str(decreasing).lower()}"]:
            fh.write(f"# {c}\n")
        fh.write("t,P,n,extrapolated_P\n")
        for t, p, n, _, pe in curve.samples:
            fh.write(f"{float(t)!r},{float(p)!r},{n},{float(pe)!r}\n")
    for t, p, *_ in curve.samples:
        print(f"P({t:g}) = {p:.10f}")


def _cloud(run: Run, count=None):
    a = run.args
    if a.method == "full_tree":
        return julia_cloud(run.gs, "full_tree", depth=run.depth, seed_point=run.cfg.base_point, threads=run.threads)
    return julia_cloud(
        run.gs,
        count=count or a.count or run.cfg.cloud_count,
        rng_seed=run.seed,
        seed_point=run.cfg.base_point,
        threads=run.threads,
    )


def cmd_julia(run: Run):
    cloud = _cloud(run)
    write_points_csv(cloud.points, run.out / "julia.csv", run.header() + [f"method {cloud.meta['method']}"])
    print(f"{len(cloud)} points -> {run.out / 'julia.csv'}")


def cmd_render(run: Run):
    cloud = _cloud(run)
    bounds = _floats(run.args.bounds) if run.args.bounds else run.cfg.render_bounds
    res = [int(v) for v in _floats(run.args.resolution)] if run.args.resolution else run.cfg.render_resolution
    grid = render(cloud, bounds, res)
    comments = run.header() + [f"bounds {' '.join(repr(float(b)) for b in bounds)}"]
    write_pgm(grid, run.out / "render.pgm", comments)
    rows, cols = np.nonzero(grid)
    centres = cell_centers(grid, bounds)
    with open(run.out / "render_cells.csv", "w", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write("row,col,re,im\n")
        for r, c, z in zip(rows, cols, centres):
            fh.write(f"{r},{c},{float(z.real)!r},{float(z.imag)!r}\n")
    print(f"{int(grid.sum())} cells set -> {run.out / 'render.pgm'}")


def cmd_poincare(run: Run):
    N = run.args.levels or run.depth + 1
    grid = _floats(run.args.t)
    scan = scan_series(run.gs, run.x, grid, N, threads=run.threads)
    scan.write_csv(run.out / "poincare.csv", run.header())
    s = critical_exponent(run.gs, run.x, N=N, threads=run.threads)
    coincide = word_coincidences(run.gs)
    if coincide:
        run.warn(f"{len(coincide)} coincident word pairs: the semigroup series may differ from the word series")
    run.write_json("poincare.json", {"critical_exponent": s, "levels": N, "coincident_pairs": len(coincide)})
    print(f"critical exponent {s:.8f} (levels 1..{N})")


def cmd_measure(run: Run):
    a = run.args
    gs = run.gs
    t = a.t_exp
    if t is None:
        t = bowen_dimension(gs, run.x, run.depth, threads=run.threads).delta
    p_min = a.p_min or run.cfg.measure_depths[0]
    p_max = a.p_max or run.cfg.measure_depths[1]
    mu = conformal_measure(gs, t, run.x, p_min, p_max, threads=run.threads)
    mu.write_csv(run.out / "atoms.csv", run.header() + [f"t {float(t)!r}"])
    payload = {"t": t, "p_range": [p_min, p_max], "atoms": len(mu)}
    try:
        reg = regularity_audit(mu, t, rng_seed=run.seed, euclidean=a.euclidean)
        reg.write_csv(run.out / "regularity.csv", run.header())
        payload["regularity"] = {"slope": reg.slope, "ratio_range": list(reg.ratio_range), "radii": reg.radii}
        print(f"regularity slope {reg.slope:.4f} (delta {t:.4f})")
    except ValueError as exc:
        payload["regularity"] = {"error": str(exc)}
        run.warn(f"regularity audit refused: {exc}")
    cloud = julia_cloud(gs, count=100_000, rng_seed=run.seed, seed_point=run.cfg.base_point, threads=run.threads)
    box = box_dimension(cloud, euclidean=a.euclidean)
    box.write_csv(run.out / "box_counts.csv", run.header())
    payload["box_dimension"] = {"slope": box.slope, "radii": box.radii, "counts": box.counts}
    print(f"box dimension    {box.slope:.4f}")
    overlaps = []
    for i in range(1, gs.m + 1):
        for j in range(i + 1, gs.m + 1):
            rep = separating_overlap(gs, mu, i, j, euclidean=a.euclidean)
            overlaps.append(rep.to_json())
            print(f"overlap ({i},{j})    " + " ".join(f"{m:.2e}" for m in rep.mass))
    payload["overlaps"] = overlaps
    run.write_json("measure.json", payload)


def cmd_check(run: Run):
    report, exp = run_checks(run)
    verdicts = {
        "expanding": report["expansion"]["verdict"],
        "hyperbolic": report["hyperbolicity"]["verdict"],
        "open_set_condition": None if report["open_set_condition"] is None else report["open_set_condition"]["verdict"],
    }
    report["verdicts"] = verdicts
    run.write_json("check.json", report)
    for k, v in verdicts.items():
        print(f"{k:20s} {v if v is not None else 'unchecked'}")


COMMANDS = {
    "dim": cmd_dim,
    "pressure": cmd_pressure,
    "julia": cmd_julia,
    "render": cmd_render,
    "poincare": cmd_poincare,
    "measure": cmd_measure,
    "check": cmd_check,
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="config JSON path or bundled name (z2, gasket, ...)")
    common.add_argument("--depth", type=int, help="tree depth n (default from config or node budget)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, help="RNG seed (default from config)")
    common.add_argument("--out", help="output directory (default from config)")
    common.add_argument("--strict", action="store_true", help="exit 2 on checker warnings")
    common.add_argument("--euclidean", action="store_true", help="planar instead of chordal distances")

    p = _Parser(prog="semigroup-dim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"semigroup_dim {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("dim", parents=[common], help="Bowen dimension with checks")
    sp = sub.add_parser("pressure", parents=[common], help="pressure curve CSV")
    sp.add_argument("--t", default="0,0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.5,3", help="comma-separated t grid")
    for name in ("julia", "render"):
        sp = sub.add_parser(name, parents=[common], help=f"{name} of a Julia cloud")
        sp.add_argument("--method", choices=["random_walk", "full_tree"], default="random_walk")
        sp.add_argument("--count", type=int)
        if name == "render":
            sp.add_argument("--bounds", help="re_min,re_max,im_min,im_max (write --bounds=-2,2,-2,2 when the first is negative)")
            sp.add_argument("--resolution", help="W,H")
    sp = sub.add_parser("poincare", parents=[common], help="truncated Poincare series and critical exponent")
    sp.add_argument("--t", default="0,0.5,1,1.5,2,2.5,3")
    sp.add_argument("--levels", type=int)
    sp = sub.add_parser("measure", parents=[common], help="conformal measure audits and box counting")
    sp.add_argument("--t", dest="t_exp", type=float, help="exponent (default: computed delta)")
    sp.add_argument("--p-min", type=int)
    sp.add_argument("--p-max", type=int)
    sub.add_parser("check", parents=[common], help="expansion, hyperbolicity and OSC verdicts")
    return p


def _setup_logging():
    level = os.environ.get("SEMIGROUP_DIM_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        run = Run(args, cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(all="ignore"):
            COMMANDS[args.command](run)
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.strict and run.warnings:
        return EXIT_WARN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
