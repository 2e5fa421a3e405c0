"""Command-line front end: ``brownmap <command> [options]``.

Every command writes CSV and/or JSON into ``--out`` and prints a short
summary.  Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import constructions, density, dyson, geometry, rmt, spectral
from .errors import NumericalError
from .model import AtomicProfile, ModelError, load_model

SCHEMA = 1
log = logging.getLogger("brownmap")


class ConfigError(ValueError):
    """Invalid command-line configuration."""


def fmt(value) -> str:
    """Fixed 17-significant-digit formatting for reproducible outputs."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else str(float(obj))
    return obj


def write_json(path: Path, payload: dict) -> None:
    payload = {"schema": SCHEMA, **payload}
    path.write_text(json.dumps(_jsonable(payload), indent=2,
                               sort_keys=True) + "\n")


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v
                             for v in row])


# ------------------------------------------------------------- config

def parse_window(text: str | None):
    if text is None:
        return None
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"window {text!r} is not four numbers") from exc
    if len(parts) != 4 or not (parts[1] > parts[0] and parts[3] > parts[2]):
        raise ConfigError(f"window {text!r} must be xmin,xmax,ymin,ymax "
                          "with a nonempty extent")
    return tuple(parts)


def parse_points(items):
    pts = []
    for item in items or []:
        try:
            x, y = (float(v) for v in item.split(","))
        except ValueError as exc:
            raise ConfigError(f"point {item!r} must be x,y") from exc
        pts.append(complex(x, y))
    return pts


def threads_from(args) -> int:
    raw = args.threads if args.threads is not None else \
        os.environ.get("BROWNMAP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"thread count {raw!r} is not an integer") from exc
    if n < 1:
        raise ConfigError("thread count must be positive")
    return n


def solver_options(args) -> dyson.SolverOptions:
    try:
        return dyson.SolverOptions(
            tol=args.tol, max_iter=args.max_iter, eta_floor=args.eta_floor,
            eta_factor=args.eta_factor, bulk_threshold=args.bulk_threshold)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_source(args) -> tuple[AtomicProfile, str, object]:
    if getattr(args, "model", None):
        return load_model(args.model), str(args.model), None
    name = getattr(args, "example", None)
    if not name:
        raise ConfigError("give --example NAME or --model FILE")
    try:
        profile, spec = constructions.make_example(name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    return profile, name, spec


def default_window(profile: AtomicProfile, pad: float = 1.1):
    r = pad * density.support_radius(profile)
    c = complex(profile.weights @ profile.deformation)
    return (c.real - r, c.real + r, c.imag - r, c.imag + r)


def bulk_sample(profile: AtomicProfile, count: int, depth: float = 0.05):
    """Deterministic points with ``beta < -depth`` from a coarse grid."""
    x0, x1, y0, y1 = default_window(profile)
    xs, ys = np.linspace(x0, x1, 41), np.linspace(y0, y1, 41)
    cand = (xs[:, None] + 1j * ys[None, :]).ravel()
    cand = cand[spectral.beta_values(profile, cand) < -depth]
    if cand.size == 0:
        raise NumericalError("no bulk points found for the default sample")
    idx = np.linspace(0, cand.size - 1, min(count, cand.size)).astype(int)
    return list(cand[idx])


def resolution(args):
    res = args.res
    if res < 8:
        raise ConfigError("resolution must be at least 8")
    return res


def out_dir(args) -> Path:
    path = Path(args.out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: "
                          f"{exc}") from exc
    return path


# ----------------------------------------------------------- commands

def cmd_density(args) -> int:
    profile, source, _ = load_source(args)
    window = parse_window(args.window) or default_window(profile)
    res = resolution(args)
    grid = density.density_grid(profile, window, res, res,
                                threads=threads_from(args),
                                method=args.method, opts=solver_options(args))
    out = out_dir(args)
    rows = ((x, y, grid.sigma[i, j], grid.beta_field[i, j], grid.mask[i, j])
            for i, x in enumerate(grid.x) for j, y in enumerate(grid.y))
    write_csv(out / "grid.csv", ["x", "y", "sigma", "beta", "in_support"],
              rows)
    summary = {"command": "density", "model": source, "window": window,
               "res": res, "mass": grid.mass, "clamp_count": grid.clamp_count,
               "raw_min": grid.raw_min,
               "support_cells": int(grid.mask.sum())}
    write_json(out / "summary.json", summary)
    print(f"mass {grid.mass:.6f} on {res}x{res} cells; "
          f"{grid.clamp_count} clamped; wrote {out}/grid.csv")
    return 0


def cmd_boundary(args) -> int:
    profile, source, _ = load_source(args)
    window = parse_window(args.window) or default_window(profile)
    res = resolution(args)
    x, y, field = density.beta_grid(profile, window, res, res)
    trace = geometry.trace_boundary((x, y, field))
    out = out_dir(args)
    rows = []
    curves = []
    for k, c in enumerate(trace.contours):
        rows.extend((k, "edge", c.closed, p.real, p.imag) for p in c.points)
        curves.append({"id": k, "kind": "edge", "closed": c.closed,
                       "points": int(c.points.size),
                       "signed_area": c.signed_area, "length": c.length})
    for m, tc in enumerate(trace.touching, start=len(trace.contours)):
        pts = tc.midline.points
        rows.extend((m, "touching", True, p.real, p.imag) for p in pts)
        curves.append({"id": m, "kind": "touching", "closed": True,
                       "points": int(pts.size),
                       "mean_radius": float(np.mean(np.abs(pts))),
                       "max_beta": tc.max_beta, "delta": tc.delta})
    write_csv(out / "boundary.csv", ["curve", "kind", "closed", "x", "y"],
              rows)
    write_json(out / "boundary.json", {
        "command": "boundary", "model": source, "window": window, "res": res,
        "cell_size": trace.cell_size, "saddle_cells": trace.saddle_cells,
        "curves": curves})
    print(f"{len(trace.contours)} zero contours, {len(trace.touching)} "
          f"touching curves; wrote {out}/boundary.csv")
    return 0


def cmd_singularities(args) -> int:
    profile, source, _ = load_source(args)
    window = parse_window(args.window) or default_window(profile)
    seeds = parse_points(args.seed_point) or None
    points = geometry.find_singular_points(
        profile, window, seeds=seeds, res=max(resolution(args), 8),
        threads=threads_from(args))
    out = out_dir(args)
    write_json(out / "singularities.json", {
        "command": "singularities", "model": source, "window": window,
        "points": [p.to_json() for p in points]})
    for p in points:
        flag = " (tentative)" if p.K is None else ""
        print(f"{p.location.real:+.10f}{p.location.imag:+.10f}i  "
              f"{p.kind}  K={p.K_label} tau={p.tau:+d}{flag}")
    if not points:
        print("no singular points")
    return 0


def cmd_beta(args) -> int:
    profile, source, _ = load_source(args)
    pts = parse_points(args.at)
    if not pts:
        window = parse_window(args.window) or default_window(profile)
        res = resolution(args)
        x, y, _ = density.beta_grid(profile, window, res, res)
        pts = list((x[:, None] + 1j * y[None, :]).ravel())
    rows = []
    for z in pts:
        ev = spectral.beta_eval(profile, z)
        gx, gy = spectral.gradient_xy(ev.grad)
        rows.append((z.real, z.imag, ev.beta, gx, gy, ev.lambda_pf))
    out = out_dir(args)
    write_csv(out / "beta.csv",
              ["x", "y", "beta", "grad_x", "grad_y", "lambda_pf"], rows)
    if len(rows) <= 20:
        for r in rows:
            print(f"beta({r[0]:+.6g}{r[1]:+.6g}i) = {r[2]:.17g}")
    print(f"wrote {len(rows)} values to {out}/beta.csv")
    return 0


def cmd_construct(args) -> int:
    if args.kind == "even":
        if args.n < 2:
            raise ConfigError("even construction needs --n >= 2")
        if args.tau not in (-1, 1):
            raise ConfigError("--tau must be -1 or 1")
        sol = constructions.construct_even(args.n, args.tau)
    else:
        if args.n < 1:
            raise ConfigError("odd construction needs --n >= 1")
        sol = constructions.construct_odd(args.n)
    nu = sol.measure()
    K, tau = sol.expected()
    ders = constructions.f_axis_derivatives(nu, K)
    try:
        exact = geometry.symmetric_classify(nu, 1.0)
    except ValueError as exc:
        exact = str(exc)
    residuals = {k: v for k, v in sol.residuals.items() if k != "slack"}
    if sol.kind == "even":
        top = f"Re m{2 * sol.n + 1}"
        constraint = max((abs(v) for k, v in residuals.items() if k != top),
                         default=0.0)
        sign_ok = np.sign(residuals[top]) == (-1) ** sol.n * sol.tau
    else:
        constraint = max(abs(v) for v in residuals.values())
        sign_ok = sol.residuals["slack"] > 0
    passed = bool(constraint <= 1e-8 and sign_ok
                  and isinstance(exact, tuple) and exact[0] == K
                  and (exact[1] == tau or K % 2 == 1))
    report = {"constraint_max_residual": constraint,
              "top_condition_ok": bool(sign_ok),
              "moment_values": sol.residuals,
              "axis_derivatives": ders, "expected": [K, tau],
              "symmetric_classify": exact, "passed": passed}
    out = out_dir(args)
    write_json(out / "construction.json", {
        "command": "construct", "kind": sol.kind, "n": sol.n, "tau": sol.tau,
        "masses_c": sol.c, "points_z": sol.z,
        "nu": {"atoms": nu.atoms, "weights": nu.masses},
        "model": {"weights": nu.masses,
                  "deformation": [[a.real, a.imag] for a in nu.atoms],
                  "scalar_variance": 1.0},
        "verification": report})
    print(f"{sol.kind} n={sol.n}: {nu.atoms.size} atoms, constraint residual "
          f"{constraint:.2e}, expected K={K} tau={tau:+d}, "
          f"verification {'passed' if passed else 'FAILED'}")
    return 0 if passed else 1


def cmd_rmt(args) -> int:
    profile, source, _ = load_source(args)
    window = parse_window(args.window) or default_window(profile)
    res = resolution(args)
    if not 1 <= args.bins <= res:
        raise ConfigError("--bins must lie between 1 and --res")
    if args.n < 2 or args.seeds < 1:
        raise ConfigError("need --n >= 2 and --seeds >= 1")
    grid = density.density_grid(profile, window, res, res,
                                threads=threads_from(args),
                                opts=solver_options(args))
    out = out_dir(args)
    seeds = range(args.seed0, args.seed0 + args.seeds)

    def run(seed):
        return rmt.sample_spectrum(profile, args.n, seed, source,
                                   complex_entries=args.complex_entries)

    # one eigensolve per seed; seeds run on the worker threads
    with ThreadPoolExecutor(max_workers=threads_from(args)) as pool:
        samples = list(pool.map(run, seeds))
    reports = []
    for seed, sample in zip(seeds, samples):
        lam = sample.eigenvalues
        order = np.lexsort((lam.imag, lam.real))
        write_csv(out / f"eigenvalues_seed{seed}.csv", ["re", "im"],
                  ((v.real, v.imag) for v in lam[order]))
        rep = rmt.compare(sample, grid, profile, coarse=args.bins)
        reports.append({"seed": seed, "inside_fraction": rep.inside_fraction,
                        "cells_tested": rep.cells_tested,
                        "cells_within": rep.cells_within,
                        "band_fraction": rep.band_fraction, "chi2": rep.chi2})
        print(f"seed {seed}: inside-fraction {rep.inside_fraction:.4f}, "
              f"{rep.cells_within}/{rep.cells_tested} bulk cells within 3 "
              "sigma")
    write_json(out / "rmt.json", {"command": "rmt", "model": source,
                                  "n": args.n, "window": window,
                                  "seeds": reports})
    return 0


def cmd_potential_check(args) -> int:
    profile, source, _ = load_source(args)
    pts = parse_points(args.at)
    if not pts:
        pts = bulk_sample(profile, args.count)
    opts = solver_options(args)
    rows = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for z in pts:
            sig = density.sigma_at(profile, z, opts=opts)
            lap = density.laplacian_check(profile, z, h=args.h, opts=opts)
            gap = abs(sig - lap) / max(abs(sig), 1e-12)
            rows.append((z.real, z.imag, sig, lap, gap))
    for w in caught:
        log.warning("%s", w.message)
    out = out_dir(args)
    write_csv(out / "potential.csv",
              ["x", "y", "sigma", "minus_laplacian_L_over_2pi", "rel_gap"],
              rows)
    for r in rows:
        print(f"{r[0]:+.4f}{r[1]:+.4f}i  sigma={r[2]:.8f}  "
              f"-dL/2pi={r[3]:.8f}  gap={r[4]:.2e}")
    return 0


COMMANDS = {
    "density": cmd_density,
    "boundary": cmd_boundary,
    "singularities": cmd_singularities,
    "beta": cmd_beta,
    "construct": cmd_construct,
    "rmt": cmd_rmt,
    "potential-check": cmd_potential_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brownmap",
        description="Brown measure of deformed operator-valued circular "
                    "elements: density, support, singular points.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True, grid=True, solver=True, default_res=200):
        if model:
            src = p.add_mutually_exclusive_group()
            src.add_argument("--example", help="catalog name: " + ", ".join(
                sorted(constructions.CATALOG)))
            src.add_argument("--model", help="model JSON file")
        if grid:
            p.add_argument("--window", help="xmin,xmax,ymin,ymax")
            p.add_argument("--res", type=int, default=default_res)
        if solver:
            p.add_argument("--tol", type=float, default=1e-12)
            p.add_argument("--max-iter", type=int, default=100_000)
            p.add_argument("--eta-floor", type=float, default=1e-10)
            p.add_argument("--eta-factor", type=float, default=0.5)
            p.add_argument("--bulk-threshold", type=float, default=1e-4)
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (env BROWNMAP_THREADS)")
        p.add_argument("--out", default="brownmap-out")

    p = sub.add_parser("density", help="density grid and total mass")
    common(p)
    p.add_argument("--method", choices=["auto", "closed", "dyson"],
                   default="auto")
    common(sub.add_parser("boundary", help="support boundary polylines"),
           solver=False, default_res=300)
    p = sub.add_parser("singularities", help="find and classify singular "
                       "points")
    common(p, solver=False, default_res=64)
    p.add_argument("--seed-point", action="append",
                   help="Newton start x,y (repeatable)")
    p = sub.add_parser("beta", help="beta and its gradient")
    common(p, solver=False, default_res=50)
    p.add_argument("--at", action="append", help="point x,y (repeatable)")
    p = sub.add_parser("construct", help="deformation with a prescribed "
                       "singularity")
    common(p, model=False, grid=False, solver=False)
    p.add_argument("--kind", choices=["even", "odd"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tau", type=int, default=1)
    p = sub.add_parser("rmt", help="random-matrix comparison")
    common(p, default_res=200)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed0", type=int, default=0)
    p.add_argument("--complex-entries", action="store_true")
    p.add_argument("--bins", type=int, default=20,
                   help="count blocks per axis for the binned comparison")
    p = sub.add_parser("potential-check", help="density against the "
                       "Laplacian of the log-potential")
    common(p, grid=False)
    p.add_argument("--at", action="append", help="point x,y (repeatable)")
    p.add_argument("--h", type=float, default=1e-3)
    p.add_argument("--count", type=int, default=5,
                   help="number of default bulk points when --at is absent")
    return parser


def _join_negative_values(argv):
    """Glue ``--window -2,2,...`` into one token so argparse accepts it."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--window", "--at", "--seed-point"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else
                        logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}",
              file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
