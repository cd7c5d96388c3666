"""Command-line driver: experiment orchestration with bit-stable reports.

Every subcommand validates its configuration before any computation, writes
its outputs into one run directory, and finishes with a `manifest.json`
(sorted keys, shortest round-trip numbers, no timestamps) so repeated runs
with the same configuration are byte-identical.  Exit codes: 0 success,
1 solver failure (partial outputs plus a "failed" manifest), 2 bad
configuration (nothing computed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, MaxsliceError, NotSpacelikeHyperplane
from .fields import ScalarField, read_csv, write_csv
from .geodesic import (GeodesicSliceSpec, boundary_trace, fit_geodesic_trace,
                       geodesic_height_field, trace_constancy_check)
from .geometry import slice_geometry
from .grids import Grid, SphereGrid
from .linear import (BoundaryDatum, apply_linear, barrier_check, barrier_image,
                     solve_linear)
from .slicesolve import (SolverConfig, continuation_solve, jacobian_vector,
                         newton_solve, residual)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------- plumbing

def _parse_grid(text, n):
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {text!r}") from exc
    if n == 2 and len(dims) == 2:
        return Grid(2, dims[0], dims[1])
    if n == 3 and len(dims) == 2:
        return Grid(3, dims[0], dims[1], mode="axisym")
    if n == 3 and len(dims) == 3:
        return Grid(3, dims[0], dims[1], dims[2], mode="full")
    raise ConfigError(f"grid spec {text!r} does not fit dimension {n}")


def _outdir(args):
    out = args.out or os.environ.get("MAXSLICE_OUTDIR") or "maxslice-run"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(outdir, command, config, results, status="ok", error=None):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "maxslice",
        "version": __version__,
        "command": command,
        "config": config,
        "status": status,
        "error": error,
        "results": results,
    }
    text = json.dumps(manifest, sort_keys=True, indent=1)
    (Path(outdir) / "manifest.json").write_text(text + "\n")
    return manifest


def _geometry_rows(rep):
    """CSV rows `r,theta[,phi],H,h2,gauss_residual` on the inset rings."""
    grid = rep.grid
    sph = grid.sphere
    nring = rep.H_div.shape[0]
    lines = []
    if sph.kind == "full":
        lines.append("r,theta,phi,H,h2,gauss_residual")
        for i in range(nring):
            for jt, th in enumerate(sph.theta):
                for jp, ph in enumerate(sph.phi):
                    lines.append(f"{float(grid.r[i])!r},{float(th)!r},{float(ph)!r},"
                                 f"{float(rep.H_div[i, jt, jp])!r},"
                                 f"{float(rep.h2[i, jt, jp])!r},{float(rep.gauss_residual[i, jt, jp])!r}")
    else:
        lines.append("r,theta,H,h2,gauss_residual")
        for i in range(nring):
            for jt, th in enumerate(sph.theta):
                lines.append(f"{float(grid.r[i])!r},{float(th)!r},{float(rep.H_div[i, jt])!r},"
                             f"{float(rep.h2[i, jt])!r},{float(rep.gauss_residual[i, jt])!r}")
    return "\n".join(lines) + "\n"


def _geometry_summary(rep):
    out = {
        "h2_max": float(np.max(rep.h2)),
        "H_div_sup": float(np.max(np.abs(rep.H_div))),
        "H_emb_sup": float(np.max(np.abs(rep.H_emb))),
        "H_consistency": rep.H_consistency,
        "gauss_residual_sup": float(np.max(rep.gauss_residual)),
        "normal_norm_error": rep.normal_norm_error,
        "h_symmetry_error": rep.h_symmetry_error,
        "spacelike_margin": rep.spacelike_margin,
        "g_positive": rep.g_positive,
        "h_floor": rep.h_floor,
        "h2_decay": None if rep.h_decay is None else {
            "exponent": rep.h_decay.exponent,
            "r_squared": rep.h_decay.r_squared,
            "window": list(rep.h_decay.window),
            "rings": rep.h_decay.rings,
        },
        "h2_decay_label": rep.h_decay_label(),
        "inset_rings": rep.inset,
    }
    return out


def _solution_summary(sol):
    return {
        "eps": sol.eps,
        "residual_sup": sol.residual_sup,
        "spacelike_margin": sol.spacelike_margin,
        "final_newton_iterations": sol.iterations,
        "continuation": sol.log,
    }


def _boundary_rows(sphere, values):
    if sphere.kind == "full":
        lines = ["theta,phi,value"]
        for jt, th in enumerate(sphere.theta):
            for jp, ph in enumerate(sphere.phi):
                lines.append(f"{float(th)!r},{float(ph)!r},{float(values[jt, jp])!r}")
    else:
        lines = ["theta,value"]
        for jt, th in enumerate(sphere.theta):
            lines.append(f"{float(th)!r},{float(values[jt])!r}")
    return "\n".join(lines) + "\n"


def _read_boundary_csv(path):
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    data = np.loadtxt(text[1:], delimiter=",")
    data = np.atleast_2d(data)
    if header[:2] == ["theta", "phi"]:
        thetas = np.unique(data[:, 0])
        phis = np.unique(data[:, 1])
        sph = SphereGrid("full", thetas.size, phis.size)
        vals = np.full(sph.shape, np.nan)
        jt = np.searchsorted(np.sort(thetas), data[:, 0])
        jp = np.rint(data[:, 1] / (2 * np.pi / phis.size)).astype(int) % phis.size
        vals[jt, jp] = data[:, 2]
    else:
        thetas = np.unique(data[:, 0])
        uniform = np.allclose(np.sort(thetas),
                              2 * np.pi * np.arange(thetas.size) / thetas.size, atol=1e-9)
        sph = SphereGrid("fourier" if uniform else "axisym", thetas.size)
        vals = np.full(sph.shape, np.nan)
        jt = np.searchsorted(np.sort(thetas), data[:, 0])
        vals[jt] = data[:, 1]
    if np.any(np.isnan(vals)):
        raise ConfigError("boundary CSV is missing nodes")
    return sph, vals


def _random_smooth_spacelike(grid, seed, amplitude=0.2):
    """Deterministic smooth spacelike test field for the identity checks."""
    rng = np.random.default_rng(seed)
    if grid.n == 3 and grid.sphere.kind == "axisym":
        x = np.cos(grid.sphere.theta)
        prof = np.zeros(grid.shape)
        bnd = np.zeros(grid.sphere.shape)
        for l in range(5):
            cl = rng.uniform(-1, 1)
            dl = rng.uniform(-0.5, 0.5)
            pl = np.polynomial.legendre.legval(x, [0.0] * l + [1.0])
            rad = grid.r ** l * (1.0 + dl * grid.r ** 2)
            prof += cl * rad[:, None] * pl[None, :]
            bnd += cl * (1.0 + dl) * pl
    elif grid.n == 2:
        th = grid.sphere.theta
        prof = np.zeros(grid.shape)
        bnd = np.zeros(grid.sphere.shape)
        for k in range(5):
            ck = rng.uniform(-1, 1)
            dk = rng.uniform(-0.5, 0.5)
            ph = rng.uniform(0, 2 * np.pi)
            rad = grid.r ** k * (1.0 + dk * grid.r ** 2)
            prof += ck * rad[:, None] * np.cos(k * th + ph)[None, :]
            bnd += ck * (1.0 + dk) * np.cos(k * th + ph)
    else:
        raise ConfigError("identity checks run on axisymmetric or disk grids")
    f = ScalarField(grid, prof, bnd)
    from .kernel import SliceKernel
    q = SliceKernel(grid, 0.0).state(f)["qmax"]
    scale = amplitude / max(np.sqrt(q), 1e-12)
    return scale * f


# ---------------------------------------------------------------- commands

def _cmd_oracle(args):
    outdir = _outdir(args)
    spec = GeodesicSliceSpec(args.A, args.B, args.C, args.w0)
    grid = _parse_grid(args.grid, args.n)
    config = {"A": args.A, "B": args.B, "C": args.C, "w0": args.w0,
              "n": args.n, "grid": args.grid}
    u = geodesic_height_field(spec, grid)
    res = residual(u, eps=1.0)
    rep = slice_geometry(u)
    write_csv(u, str(outdir / "solution.csv"))
    (outdir / "geometry.csv").write_text(_geometry_rows(rep))
    results = {
        "pde_residual_sup": res.sup(),
        "geometry": _geometry_summary(rep),
        "spacelike_margin": rep.spacelike_margin,
    }
    _write_manifest(outdir, "oracle", config, results)
    return 0


def _cmd_solve_linear(args):
    outdir = _outdir(args)
    grid = _parse_grid(args.grid, args.n)
    config = {"eta": args.eta, "bdata": args.bdata, "n": args.n,
              "grid": args.grid, "barrier_s": args.barrier_s}
    if args.eta == "zero":
        eta = ScalarField.zeros(grid)
    elif args.eta.startswith("barrier:"):
        s = float(args.eta.split(":", 1)[1])
        eta = ScalarField(grid, barrier_image(s, grid))
    else:
        raise ConfigError(f"unknown source spec {args.eta!r}")
    bdata = BoundaryDatum.from_string(args.bdata)
    u = solve_linear(eta, bdata)
    res = eta.interior - apply_linear(u).interior
    brep = barrier_check(args.barrier_s, grid, solution=u, source=eta)
    write_csv(u, str(outdir / "solution.csv"))
    results = {
        "residual_sup": float(np.max(np.abs(res))),
        "solution_sup": u.sup(),
        "barrier": {
            "s": brep.s, "delta": brep.delta, "positive": brep.positive,
            "delta_boundary_limit": brep.delta_boundary_limit,
            "delta_center_limit": brep.delta_center_limit,
            "weighted_sup": brep.weighted_sup,
            "source_bound": brep.source_bound,
            "bound": brep.bound, "bound_ok": brep.bound_ok,
        },
    }
    _write_manifest(outdir, "solve-linear", config, results)
    return 0


def _cmd_solve(args):
    outdir = _outdir(args)
    if args.eps < 0:
        raise ConfigError("eps must be >= 0")
    grid = _parse_grid(args.grid, args.n)
    cfg = SolverConfig(steps=args.steps, tol=args.tol, margin=args.margin)
    bdata = BoundaryDatum.from_string(args.bdata)
    config = {"bdata": args.bdata, "eps": args.eps, "n": args.n,
              "grid": args.grid, "steps": args.steps, "tol": args.tol,
              "margin": args.margin}
    sol = continuation_solve(bdata, args.eps, cfg, grid=grid)
    rep = slice_geometry(sol.u)
    write_csv(sol.u, str(outdir / "solution.csv"))
    (outdir / "geometry.csv").write_text(_geometry_rows(rep))
    results = {
        "solution": _solution_summary(sol),
        "geometry": _geometry_summary(rep),
        "verdict": "spacelike" if sol.spacelike_margin > 0 else "degenerate",
    }
    _write_manifest(outdir, "solve", config, results)
    return 0


def _cmd_diagnose(args):
    outdir = _outdir(args)
    u = read_csv(args.solution, n=args.n, mode=args.mode)
    config = {"solution": args.solution, "n": u.grid.n,
              "grid": u.grid.label()}
    rep = slice_geometry(u)
    (outdir / "geometry.csv").write_text(_geometry_rows(rep))
    results = {"geometry": _geometry_summary(rep)}
    _write_manifest(outdir, "diagnose", config, results)
    return 0


def _cmd_identity(args):
    outdir = _outdir(args)
    if args.eps <= 0:
        raise ConfigError("identity check wants eps > 0")
    grid = _parse_grid(args.grid, args.n)
    config = {"eps": args.eps, "seed": args.seed, "n": args.n,
              "grid": args.grid}
    u = _random_smooth_spacelike(grid, args.seed)
    se = float(np.sqrt(args.eps))
    lhs = residual(se * u, eps=1.0)
    rhs = residual(u, eps=args.eps)
    scaling_dev = float(np.max(np.abs(lhs.interior - se * rhs.interior)))
    v = _random_smooth_spacelike(grid, args.seed + 1)
    jv = jacobian_vector(ScalarField.zeros(grid), v)
    lv = apply_linear(v)
    jac_dev = float(np.max(np.abs(jv.interior - lv.interior)))
    scale = max(lv.sup(), 1e-300)
    results = {
        "scaling_identity_dev": scaling_dev,
        "jacobian_zero_dev": jac_dev,
        "jacobian_zero_dev_relative": jac_dev / scale,
    }
    _write_manifest(outdir, "identity", config, results)
    return 0


def _sweep_case(task, gtext, n, C):
    grid = _parse_grid(gtext, n)
    if task == "oracle":
        spec = GeodesicSliceSpec(0.0, 0.0, C, 0.0)
        u = geodesic_height_field(spec, grid)
        err = residual(u, eps=1.0).sup()
    elif task == "manufactured":
        eta = ScalarField(grid, barrier_image(2.0, grid))
        u = solve_linear(eta, 0.0)
        exact = grid.rad(grid.tau ** 2)
        err = float(np.max(np.abs(u.interior - exact)))
    else:
        raise ConfigError(f"unknown sweep task {task!r}")
    return {"grid": gtext, "nr": grid.nr, "dr": grid.dr, "error": err}


def _cmd_sweep(args):
    outdir = _outdir(args)
    grids = args.grids.split(",")
    if len(grids) < 2:
        raise ConfigError("sweep needs at least two grids")
    config = {"task": args.task, "grids": grids, "n": args.n, "C": args.C,
              "threads": args.threads}
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(
                lambda gt: _sweep_case(args.task, gt, args.n, args.C), grids))
    else:
        rows = [_sweep_case(args.task, gt, args.n, args.C) for gt in grids]
    ratios = [rows[i]["error"] / rows[i + 1]["error"]
              for i in range(len(rows) - 1)]
    lines = ["grid,nr,dr,error"]
    for row in rows:
        lines.append(f"{row['grid']},{row['nr']},{float(row['dr'])!r},{float(row['error'])!r}")
    (outdir / "convergence.csv").write_text("\n".join(lines) + "\n")
    results = {"rows": rows, "refinement_ratios": ratios,
               "second_order_ok": bool(all(x >= 3.5 for x in ratios))}
    _write_manifest(outdir, "sweep", config, results)
    return 0


def _cmd_fit_boundary(args):
    outdir = _outdir(args)
    if args.input:
        sphere, w = _read_boundary_csv(args.input)
        config = {"input": args.input}
    elif args.spec:
        vals = [float(v) for v in args.spec.split(",")]
        if len(vals) != 4:
            raise ConfigError("--spec wants A,B,C,w0")
        spec = GeodesicSliceSpec(*vals)
        nt, nph = (int(v) for v in args.sphere.lower().split("x"))
        sphere = SphereGrid("full", nt, nph)
        w, _ = boundary_trace(spec, sphere)
        config = {"spec": vals, "sphere": args.sphere}
    else:
        raise ConfigError("fit-boundary wants --input or --spec")
    fit = fit_geodesic_trace(w, sphere)
    results = {
        "fit": {"A": fit.A, "B": fit.B, "C": fit.C, "w0": fit.w0,
                "residual": fit.residual, "geodesic": fit.geodesic,
                "constant_trace": fit.constant_trace},
    }
    if sphere.kind == "full":
        con = trace_constancy_check(w, sphere)
        results["constancy"] = {"w0": con.w0, "mean": con.mean,
                                "max_deviation": con.max_deviation,
                                "fitted_norm2": con.fitted_norm2}
    (outdir / "boundary.csv").write_text(_boundary_rows(sphere, w))
    _write_manifest(outdir, "fit-boundary", config, results)
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(
        prog="maxslice",
        description="maximal spacelike slices of anti-de Sitter space: "
                    "solvers and geometry diagnostics")
    p.add_argument("--threads", type=int, default=1,
                   help="worker pool size for independent sweep cases")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, grid_default="64x32"):
        q.add_argument("--n", type=int, default=3, choices=(2, 3))
        q.add_argument("--grid", default=grid_default)
        q.add_argument("--out", default=None)

    q = sub.add_parser("oracle", help="evaluate an exact geodesic slice")
    q.add_argument("--A", type=float, default=0.0)
    q.add_argument("--B", type=float, default=0.0)
    q.add_argument("--C", type=float, default=0.5)
    q.add_argument("--w0", type=float, default=0.0)
    common(q)
    q.set_defaults(fn=_cmd_oracle)

    q = sub.add_parser("solve-linear", help="solve the linearized problem")
    q.add_argument("--eta", default="zero", help="zero | barrier:S")
    q.add_argument("--bdata", default="constant:0")
    q.add_argument("--barrier-s", type=float, default=2.0)
    common(q)
    q.set_defaults(fn=_cmd_solve_linear)

    q = sub.add_parser("solve", help="continuation solve of the slice equation")
    q.add_argument("--bdata", required=True,
                   help="harmonic:l,m:c[;...] | geodesic:A,B,C,w0 | constant:c")
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--steps", type=int, default=8)
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--margin", type=float, default=0.05)
    common(q)
    q.set_defaults(fn=_cmd_solve)

    q = sub.add_parser("diagnose", help="geometry report for a height CSV")
    q.add_argument("--solution", required=True)
    q.add_argument("--mode", default=None)
    q.add_argument("--n", type=int, default=None, choices=(2, 3))
    q.add_argument("--out", default=None)
    q.set_defaults(fn=_cmd_diagnose)

    q = sub.add_parser("identity", help="scaling and linearization identities")
    q.add_argument("--eps", type=float, default=0.25)
    q.add_argument("--seed", type=int, default=7)
    common(q, grid_default="48x24")
    q.set_defaults(fn=_cmd_identity)

    q = sub.add_parser("sweep", help="grid refinement study")
    q.add_argument("--task", default="oracle", choices=("oracle", "manufactured"))
    q.add_argument("--grids", default="64x32,128x64")
    q.add_argument("--C", type=float, default=0.3)
    common(q, grid_default=None)
    q.set_defaults(fn=_cmd_sweep)

    q = sub.add_parser("fit-boundary", help="geodesic-trace decision on boundary data")
    q.add_argument("--input", default=None, help="boundary CSV (theta[,phi],value)")
    q.add_argument("--spec", default=None, help="A,B,C,w0 to synthesize a trace")
    q.add_argument("--sphere", default="48x128")
    q.add_argument("--out", default=None)
    q.set_defaults(fn=_cmd_fit_boundary)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConfigError, ValueError, NotSpacelikeHyperplane) as exc:
        print(f"maxslice: configuration error: {exc}", file=sys.stderr)
        return 2
    except MaxsliceError as exc:
        out = _outdir(args)
        _write_manifest(out, args.command, {"argv": argv or sys.argv[1:]},
                        {}, status="failed", error=f"{type(exc).__name__}: {exc}")
        print(f"maxslice: solver failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
