"""Command line: reproducible pipelines writing CSV/JSON artifacts plus a run manifest.

    affspace sphere solve --shape disk --n 101 --tol 1e-3 --out omega.csv
    affspace lf transform --input f.csv --window 2 --out g.csv
    affspace cosmo field --support zero --omega omega.csv --points pts.csv --out chart.csv
    affspace cosmo foliate --support zero --omega exact --t 0.5,1,2 --out mesh/
    affspace deform orbit|gtau|domain --cocycle bend --s 0.2 --L 5 --out ...
    affspace bend --s 0.3 --out cocycle.json
    affspace verify fenchel --n 65

Relative output paths are resolved against $AFFSPACE_OUT_ROOT when it is set.
Exit codes: 0 ok, 1 invalid input, 2 numerical failure, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import cosmology as cos
from . import deformations as dfm
from . import serialization as io
from . import suites
from .affine_sphere import GaugeError, SolverError, ellipse_gauge, gauge_from_grid, solve_affine_sphere
from .cone_model import ConeError, ConeSpec, affine_support, support_from_values, zero_support
from .convex_core import GridDomain, GridError, legendre_transform, sample_function
from .fixtures import octagon_group, octagon_splitting
from .shapes import ShapeError, make_shape

OUT_ROOT_ENV = "AFFSPACE_OUT_ROOT"
EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, field_name, msg):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass
class PipelineConfig:
    shape: str = "disk"
    resolution: int = 65
    tol: float = 1e-3
    max_iter: int = 60
    group: str = "octagon"
    cocycle: str = "zero"         # zero | coboundary | bend | path to a cocycle JSON file
    V: tuple = (0.0, 0.0, 1.0)
    s: float = 0.2
    X0: tuple = (0.0, 0.0, 1.0)
    L: int = 4
    cap: int = 50_000
    seed: int = 0
    out: str = "."
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.resolution < 33:
            raise ConfigError("resolution", "must be at least 33")
        if not (self.tol > 0):
            raise ConfigError("tol", "must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter", "must be positive")
        if self.L < 0:
            raise ConfigError("L", "must be non-negative")
        try:
            make_shape(self.shape)
        except (ShapeError, ValueError) as e:
            raise ConfigError("shape", str(e)) from e
        return self


# ---------------------------------------------------------------- helpers

def _floats(text, n=None, name="value"):
    try:
        v = tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError as e:
        raise ConfigError(name, f"cannot parse {text!r}") from e
    if n is not None and len(v) != n:
        raise ConfigError(name, f"expected {n} comma separated numbers")
    return v


def _out_path(p) -> Path:
    p = Path(p)
    root = os.environ.get(OUT_ROOT_ENV)
    if root and not p.is_absolute():
        p = Path(root) / p
    return p


def _in_path(p) -> Path:
    p = Path(p)
    if not p.exists():
        raise FileNotFoundError(f"missing input file {p}")
    return p


class Run:
    """Collects inputs, tolerances, timings and outputs; writes the manifest."""

    def __init__(self, command, cfg: PipelineConfig, manifest_dir: Path):
        self.command = command
        self.cfg = cfg
        self.dir = manifest_dir
        self.inputs = {}
        self.tolerances = {}
        self.timings = {}
        self.outputs = []
        self.results = {}
        self.t0 = time.perf_counter()

    def input_file(self, p):
        p = _in_path(p)
        self.inputs[str(p)] = io.sha256_file(p)
        return p

    def output(self, p):
        self.outputs.append(Path(p))
        side = io.sidecar_path(p)
        if side.exists() and side not in self.outputs:
            self.outputs.append(side)
        return p

    def finish(self):
        self.timings["total_seconds"] = time.perf_counter() - self.t0
        import scipy
        man = {
            "command": self.command,
            "config": asdict(self.cfg),
            "inputs": self.inputs,
            "versions": {"affspace": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
            "tolerances": self.tolerances,
            "timings": self.timings,
            "results": self.results,
            "outputs": {str(p): io.sha256_file(p) for p in self.outputs},
        }
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / "manifest.json"
        io.dump_json(man, path)
        return path


def _cone(cfg: PipelineConfig) -> ConeSpec:
    return ConeSpec.from_shape(cfg.shape, cfg.resolution)


def _gauge(cfg, cone: ConeSpec, spec, run: Run):
    """Gauge from 'exact' (disks/ellipses), 'solve', or a saved omega CSV."""
    t = time.perf_counter()
    if spec in (None, "solve"):
        om = solve_affine_sphere(cone.omega_star, cfg.max_iter, cfg.tol)
    elif spec == "exact":
        om = ellipse_gauge(cone.omega_star)
    else:
        f = io.read_grid_function(run.input_file(spec), cone.omega_star)
        om = gauge_from_grid(f)
    run.timings["gauge_seconds"] = time.perf_counter() - t
    return om


def _support(cfg, cone: ConeSpec, spec, run: Run):
    if spec in (None, "zero"):
        return zero_support(cone)
    if str(spec).startswith("affine:"):
        return affine_support(cone, _floats(spec.split(":", 1)[1], 3, "support"))
    f = io.read_grid_function(run.input_file(spec), cone.omega_star)
    return support_from_values(cone, f.values, f.boundary_values, f.convexity_certified)


def _group(cfg, run: Run):
    if cfg.group == "octagon":
        return octagon_group()
    return io.group_from_json(run.input_file(cfg.group).read_text())


def _cocycle(cfg, rep, run: Run):
    kind = cfg.cocycle
    if kind == "zero":
        return dfm.zero_cocycle(rep)
    if kind == "coboundary":
        return dfm.coboundary(rep, cfg.V)
    if kind == "bend":
        if cfg.group != "octagon" and "splitting" not in cfg.extra:
            raise ConfigError("cocycle", "bending needs the octagon fixture or --splitting")
        return dfm.bend_translation(rep, _splitting(cfg, rep, run))
    return io.cocycle_from_json(rep, run.input_file(kind).read_text())


def _splitting(cfg, rep, run: Run):
    path = cfg.extra.get("splitting")
    if not path:
        return octagon_splitting(rep, cfg.s)
    d = json.loads(run.input_file(path).read_text())
    split = dfm.Splitting(tuple(d["gens_A"]), tuple(d["gens_B"]), tuple(d["lambda_words"]),
                          np.asarray(d["X"], float), None if d.get("H") is None else np.asarray(d["H"], float),
                          float(cfg.s))
    dfm.validate_splitting(rep, split)
    return split


def _check_cap(cfg, rep):
    n = dfm.count_reduced_words(len(rep.labels), cfg.L)
    if n > cfg.cap:
        raise ConfigError("L", f"{n} words of length <= {cfg.L} exceed the cap {cfg.cap}")


# ---------------------------------------------------------------- commands

def cmd_sphere_solve(cfg, args):
    out = _out_path(args.out)
    run = Run("sphere solve", cfg, out.parent)
    cone = _cone(cfg)
    run.tolerances = {"residual": cfg.tol}
    t = time.perf_counter()
    om = solve_affine_sphere(cone.omega_star, cfg.max_iter, cfg.tol)
    run.timings["solve_seconds"] = time.perf_counter() - t
    run.output(io.write_grid_function(om.omega, out, {"residual": om.info["residual"], "gauge_axioms": om.report["pass"]}))
    log = Path(args.log) if args.log else out.with_suffix(".log.jsonl")
    log = _out_path(log)
    with open(log, "w") as fh:
        for e in om.info["log"]:
            fh.write(json.dumps({"iter": e["iter"], "residual": io.jsonable(e["residual"]), "stage": e.get("stage")}) + "\n")
    run.output(log)
    run.results = {"residual": om.info["residual"], "omega_at_origin": float(om.value(np.zeros((1, 2)))[0]),
                   "iterations": om.info["iterations"]}
    return run


def cmd_lf_transform(cfg, args):
    out = _out_path(args.out)
    run = Run("lf transform", cfg, out.parent)
    if args.input:
        f = io.read_grid_function(run.input_file(args.input))
    else:
        dom = GridDomain(make_shape(cfg.shape), cfg.resolution)
        fn = {
            "quadratic": lambda y: 0.5 * (y * y).sum(1),
            "gauge": lambda y: -np.sqrt(np.clip(1 - (y * y).sum(1), 0, None)),
            "zero": lambda y: np.zeros(len(y)),
        }[args.builtin]
        f = sample_function(dom, fn, certify=True)
    t = time.perf_counter()
    g = legendre_transform(f, args.window, args.dual_n or cfg.resolution)
    run.timings["transform_seconds"] = time.perf_counter() - t
    run.output(io.write_grid_function(g, out))
    return run


def _read_points(path, run):
    _, data = io.read_rows(run.input_file(path))
    if data.shape[1] != 3:
        raise ConfigError("points", "expected rows x1,x2,lambda")
    return data


def cmd_cosmo_field(cfg, args):
    out = _out_path(args.out)
    run = Run("cosmo field", cfg, out.parent)
    cone = _cone(cfg)
    om = _gauge(cfg, cone, args.omega, run)
    s = _support(cfg, cone, args.support, run)
    X = _read_points(args.points, run)
    t = time.perf_counter()
    charts = cos.cosmological_charts(s, om, X, method=args.method)
    run.timings["chart_seconds"] = time.perf_counter() - t
    rows = [(*c.X, c.T, *c.P, *c.y, 0.0 if c.low_confidence else 1.0) for c in charts]
    run.output(io.write_rows(out, ["x1", "x2", "lambda", "T", "P1", "P2", "P3", "y1", "y2", "confidence"], rows))
    run.tolerances = {"reconstruction": "5 h (1 + T)", "low_confidence_band": "2 h"}
    run.results = {"points": len(rows), "low_confidence": int(sum(c.low_confidence for c in charts))}
    return run


def cmd_cosmo_foliate(cfg, args):
    outdir = _out_path(args.out)
    run = Run("cosmo foliate", cfg, outdir)
    cone = _cone(cfg)
    om = _gauge(cfg, cone, args.omega, run)
    s = _support(cfg, cone, args.support, run)
    for t in _floats(args.t, name="t"):
        f = cos.level_set(s, om, t, args.window, args.dual_n or cfg.resolution)
        run.output(io.write_grid_function(f, outdir / f"level_t{t:g}.csv", {"t": t}))
    return run


def _deform_setup(cfg, run):
    rep = _group(cfg, run)
    _check_cap(cfg, rep)
    c = _cocycle(cfg, rep, run)
    return rep, c


def cmd_deform_orbit(cfg, args):
    out = _out_path(args.out)
    run = Run("deform orbit", cfg, out.parent)
    rep, c = _deform_setup(cfg, run)
    P, lens = dfm.orbit_points(rep, c, cfg.X0, cfg.L, cfg.cap, return_lengths=True)
    run.output(io.write_rows(out, ["X1", "X2", "X3", "word_length"], [(*p, l) for p, l in zip(P, lens)]))
    run.results = {"points": len(P)}
    return run


def cmd_deform_gtau(cfg, args):
    out = _out_path(args.out)
    run = Run("deform gtau", cfg, out.parent)
    rep, c = _deform_setup(cfg, run)
    cone = _cone(cfg)
    est = dfm.boundary_function(cone, rep, c, cfg.X0, cfg.L, cfg.cap)
    b = cone.omega_star.boundary_nodes
    run.output(io.write_rows(out, ["y1", "y2", "g"], [(*p, v) for p, v in zip(b, est.values)]))
    run.results = {"cauchy_gap": est.gap}
    return run


def cmd_deform_domain(cfg, args):
    outdir = _out_path(args.out)
    run = Run("deform domain", cfg, outdir)
    rep, c = _deform_setup(cfg, run)
    cone = _cone(cfg)
    est = dfm.boundary_function(cone, rep, c, cfg.X0, cfg.L, cfg.cap)
    md = dfm.maximal_domain(est.values, cone)
    run.output(io.write_grid_function(md.s_minus.s, outdir / "s_minus.csv"))
    run.output(io.write_grid_function(md.s_plus, outdir / "s_plus.csv"))
    hs = outdir / "halfspaces.json"
    hs.write_text(md.halfspaces.to_json() + "\n")
    run.output(hs)
    y = cone.omega_star.nodes
    V = np.asarray(cfg.V, float)
    run.results = {"cauchy_gap": est.gap, "max_order_gap": float(md.gap().max()), "min_order_gap": float(md.gap().min())}
    if cfg.cocycle == "coboundary":
        run.results["coboundary_error"] = float(np.abs(md.s_minus.s.values - (y @ V[:2] - V[2])).max())
    return run


def cmd_bend(cfg, args):
    out = _out_path(args.out)
    run = Run("bend", cfg, out.parent)
    rep = _group(cfg, run)
    split = _splitting(cfg, rep, run)
    c = dfm.bend_translation(rep, split)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(io.cocycle_to_json(c) + "\n")
    run.output(out)
    if args.bulge_out:
        bo = _out_path(args.bulge_out)
        b = dfm.bulge(rep, split)
        bo.write_text(io.group_to_json(b) + "\n")
        run.output(bo)
        run.results["cone_violations"] = b.flags.get("cone_violations", {})
    run.results["relator_defects"] = c.relator_defects()
    return run


def cmd_verify(cfg, args):
    name = args.suite
    if name not in suites.SUITES:
        raise ConfigError("suite", f"unknown suite {name!r}; choose from {sorted(suites.SUITES)}")
    fn = suites.SUITES[name]
    kw = {}
    import inspect
    params = inspect.signature(fn).parameters
    if "n" in params and args.n:
        kw["n"] = args.n
    if "seed" in params:
        kw["seed"] = cfg.seed
    rep = fn(**kw)
    outdir = _out_path(args.out) if args.out else None
    run = Run(f"verify {name}", cfg, outdir or Path("."))
    run.results = rep
    print(json.dumps(io.jsonable(rep), indent=2))
    if outdir:
        p = outdir / f"verify_{name}.json"
        io.dump_json(rep, p)
        run.output(p)
    else:
        run.dir = None
    return run


# ---------------------------------------------------------------- parser

def _common(p, out_default):
    p.add_argument("--shape", default="disk", help="cone section: disk[:r], ellipse:a,b, square, diamond, polygon:x1,y1,...")
    p.add_argument("--n", type=int, default=None, help="grid resolution (nodes per axis)")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=out_default)


def _deform_args(p):
    p.add_argument("--group", default="octagon", help="'octagon' or a group JSON file")
    p.add_argument("--cocycle", default="zero", help="zero | coboundary | bend | cocycle JSON file")
    p.add_argument("--V", default="0,0,1")
    p.add_argument("--s", type=float, default=0.2)
    p.add_argument("--splitting", default=None, help="splitting JSON (defaults to the octagon fixture)")
    p.add_argument("--X0", default="0,0,1")
    p.add_argument("--L", type=int, default=4)
    p.add_argument("--cap", type=int, default=50_000)


def build_parser():
    ap = argparse.ArgumentParser(prog="affspace", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="group_cmd", required=True)

    sp = sub.add_parser("sphere").add_subparsers(dest="cmd", required=True)
    p = sp.add_parser("solve", help="solve for the affine sphere gauge")
    _common(p, "omega.csv")
    p.add_argument("--log", default=None, help="JSON lines convergence log (default next to --out)")
    p.set_defaults(func=cmd_sphere_solve, default_n=101)

    lf = sub.add_parser("lf").add_subparsers(dest="cmd", required=True)
    p = lf.add_parser("transform", help="discrete Legendre-Fenchel conjugate")
    _common(p, "conjugate.csv")
    p.add_argument("--input", default=None, help="grid function CSV (with JSON sidecar)")
    p.add_argument("--builtin", default="gauge", choices=["quadratic", "gauge", "zero"])
    p.add_argument("--window", type=float, default=2.0)
    p.add_argument("--dual-n", type=int, default=None)
    p.set_defaults(func=cmd_lf_transform, default_n=65)

    cs = sub.add_parser("cosmo").add_subparsers(dest="cmd", required=True)
    p = cs.add_parser("field", help="cosmological time charts at points")
    _common(p, "chart.csv")
    p.add_argument("--support", default="zero", help="zero | affine:x1,x2,lambda | support CSV")
    p.add_argument("--omega", default="solve", help="solve | exact | omega CSV")
    p.add_argument("--points", required=True, help="CSV rows x1,x2,lambda")
    p.add_argument("--method", default="ratio", choices=["ratio", "bisection"])
    p.set_defaults(func=cmd_cosmo_field, default_n=65)
    p = cs.add_parser("foliate", help="level sets of the cosmological time")
    _common(p, "mesh")
    p.add_argument("--support", default="zero")
    p.add_argument("--omega", default="solve")
    p.add_argument("--t", default="0.5,1,2")
    p.add_argument("--window", type=float, default=2.0)
    p.add_argument("--dual-n", type=int, default=None)
    p.set_defaults(func=cmd_cosmo_foliate, default_n=65)

    de = sub.add_parser("deform").add_subparsers(dest="cmd", required=True)
    for name, func, out, hlp in (("orbit", cmd_deform_orbit, "orbit.csv", "orbit of X0 under the affine group"),
                                 ("gtau", cmd_deform_gtau, "gtau.csv", "boundary function estimate"),
                                 ("domain", cmd_deform_domain, "domain", "maximal invariant domains")):
        p = de.add_parser(name, help=hlp)
        _common(p, out)
        _deform_args(p)
        p.set_defaults(func=func, default_n=65)

    p = sub.add_parser("bend", help="bending cocycle (and optionally the bulged group)")
    _common(p, "cocycle.json")
    _deform_args(p)
    p.add_argument("--bulge-out", default=None)
    p.set_defaults(func=cmd_bend, default_n=65)

    p = sub.add_parser("verify", help="run a named invariant suite")
    p.add_argument("suite", help=", ".join(sorted(suites.SUITES)))
    _common(p, None)
    p.set_defaults(func=cmd_verify, default_n=None)
    return ap


def config_from_args(args) -> PipelineConfig:
    n = args.n if args.n is not None else (args.default_n or 65)
    cfg = PipelineConfig(shape=args.shape, resolution=n, tol=args.tol, max_iter=args.max_iter, seed=args.seed,
                         out=str(args.out))
    if hasattr(args, "cocycle"):
        cfg.group = args.group
        cfg.cocycle = args.cocycle
        cfg.V = _floats(args.V, 3, "V")
        cfg.s = args.s
        cfg.X0 = _floats(args.X0, 3, "X0")
        cfg.L = args.L
        cfg.cap = args.cap
        if args.splitting:
            cfg.extra["splitting"] = args.splitting
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        np.random.seed(cfg.seed)
        run = args.func(cfg, args)
        if run.dir is not None:
            run.finish()
        if args.func is cmd_verify and not run.results.get("pass", False):
            return EXIT_VERIFY
        return EXIT_OK
    except cos.OutsideDomainError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, GaugeError, cos.CosmoError, np.linalg.LinAlgError, FloatingPointError) as e:
        msg = str(e)
        if getattr(e, "residual", None) is not None:
            msg += f" (residual {e.residual:.3g})"
        print(f"numerical failure: {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, FileNotFoundError, GridError, ShapeError, ConeError, dfm.GroupError, KeyError, ValueError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
