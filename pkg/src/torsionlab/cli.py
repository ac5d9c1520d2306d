"""``torsionlab`` command line.

Subcommands: torsion, find-zero, sweep, certify, birkhoff, linking, tilt.
Exit codes: 0 pass, 1 numerical failure, 2 precondition refusal, 3 config error.

Column schemas
--------------
torsion   x, y, n, torsion, converged
find-zero n, s_n, building_tangent, building_chi, torsion_witness, window_lower, in_window
sweep     r, witness_x, torsion, residual, bound, passed, error
linking   n, linking [, z_x, z_y, sigma, torsion, residual]
tilt      x, y, tilt, torsion_1, difference
certify and birkhoff write JSON.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import harness
from .config import SCHEMA_VERSION, build_curve, build_model, load_config, parse_config
from .errors import ConfigError, PreconditionError, TorsionLabError
from .report import csv_text, emit, json_text
from .torsion import torsion_finite, torsion_profile, torsion_via_tilt, linking_finite

EXIT_PASS, EXIT_FAIL, EXIT_REFUSED, EXIT_CONFIG = 0, 1, 2, 3
CHI = (0.0, 1.0)


def _grid_points(h, nx=16, ny=16, y_range=(-3.0, 3.0)):
    if "points" in h:
        return np.array(h["points"], dtype=float)
    nx, ny = h.get("grid_nx", nx), h.get("grid_ny", ny)
    xs = np.arange(nx) / nx
    ys = np.linspace(h.get("y_min", y_range[0]), h.get("y_max", y_range[1]), ny)
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack((X.ravel(), Y.ravel()))


def _csv_path(args, cfg):
    return args.out or cfg.output.get("csv")


def _json_path(args, cfg):
    return args.out or cfg.output.get("json")


def cmd_torsion(cfg, args):
    model = build_model(cfg)
    h = cfg.harness
    horizons = sorted(set(h.get("horizons", (h.get("n_max", 100),))))
    top = horizons[-1]
    window = h.get("window", 10)
    tol = h.get("tolerance", 1e-3)
    rows = []
    for x, y in _grid_points(h, 2, 2):
        values = torsion_profile(model, (x, y), CHI, top) / np.arange(1, top + 1)
        tail = values[-window:]
        converged = top >= 2 * window and float(tail.max() - tail.min()) < tol
        for n in horizons:
            rows.append((float(x), float(y), n, float(values[n - 1]), converged))
    emit(csv_text(["x", "y", "n", "torsion", "converged"], rows), _csv_path(args, cfg))
    return EXIT_PASS


def cmd_find_zero(cfg, args):
    model = build_model(cfg)
    curve = build_curve(cfg, model)
    h = cfg.harness
    json_path = cfg.output.get("json")
    try:
        rep = harness.find_zero_torsion_on_curve(
            model, curve, h.get("n_max", 50),
            assume_negative_torsion=args.assume_negative_torsion,
            tol=h.get("tolerance", 1e-6))
    except PreconditionError as exc:
        cert = exc.report.to_dict() if hasattr(exc.report, "to_dict") else exc.report
        emit(json_text({"refused": True, "message": str(exc), "certificate": cert}),
             json_path or (Path(args.out).with_suffix(".json") if args.out else None))
        raise
    header = ["n", "s_n", "building_tangent", "building_chi", "torsion_witness",
              "window_lower", "in_window"]
    csv_path = _csv_path(args, cfg)
    if csv_path and not json_path:
        json_path = Path(csv_path).with_suffix(".json")
    if csv_path:
        emit(csv_text(header, rep.table()), csv_path)
    emit(json_text(rep.to_dict()), json_path)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_sweep(cfg, args):
    model = build_model(cfg)
    h = cfg.harness
    rows = harness.zero_torsion_sweep(
        model, h.get("r_lo", -2.0), h.get("r_hi", 2.0), h.get("steps", 41), h.get("n_max", 100),
        threads=args.threads, assume_negative_torsion=args.assume_negative_torsion)
    header = ["r", "witness_x", "torsion", "residual", "bound", "passed", "error"]
    emit(csv_text(header, [(r.r, r.witness_x, r.torsion, r.residual, r.bound, r.passed, r.error)
                           for r in rows]), _csv_path(args, cfg))
    return EXIT_PASS if all(r.passed for r in rows) else EXIT_FAIL


def cmd_certify(cfg, args):
    model = build_model(cfg)
    h = cfg.harness
    cert = harness.certify_negative_torsion(
        model, h.get("grid_nx", 64), h.get("grid_ny", 64),
        (h.get("y_min", -3.0), h.get("y_max", 3.0)), h.get("margin_floor", 0.0),
        threads=args.threads)
    path = _json_path(args, cfg)
    if path:
        emit(json_text(cert.to_dict()), path)
    print(cert.summary())
    return EXIT_PASS if cert.passed else EXIT_FAIL


def cmd_birkhoff(cfg, args):
    model = build_model(cfg)
    curve = build_curve(cfg, model)
    h = cfg.harness
    rep = harness.birkhoff_check(model, curve, h.get("invariance_tol", 1e-6), h.get("n_max", 20),
                                 h.get("samples", 32), h.get("non_wandering", False),
                                 h.get("identity_tol", 1e-5))
    emit(json_text(rep.to_dict()), _json_path(args, cfg))
    return EXIT_PASS if rep.identity_ok and rep.decay_ok else EXIT_FAIL


def cmd_linking(cfg, args):
    model = build_model(cfg)
    h = cfg.harness
    if "x" not in h or "y" not in h:
        raise ConfigError("linking needs [harness] x and y points", key="x" if "x" not in h else "y")
    x, y = h["x"], h["y"]
    roots = h.get("segment_root", False)
    header = ["n", "linking"] + (["z_x", "z_y", "sigma", "torsion", "residual"] if roots else [])
    rows = []
    for n in range(1, h.get("n_max", 1) + 1):
        lk = linking_finite(model, x, y, n)
        row = [n, lk]
        if roots:
            z = harness.segment_torsion_root(model, x, y, n, lk)
            row += [z.point.X, z.point.Y, z.sigma, z.torsion, z.residual]
        rows.append(row)
    emit(csv_text(header, rows), _csv_path(args, cfg))
    return EXIT_PASS


def cmd_tilt(cfg, args):
    model = build_model(cfg)
    h = cfg.harness
    tol = h.get("tolerance", 1e-6)
    rows = []
    for x, y in _grid_points(h):
        tilt = torsion_via_tilt(model, (x, y))
        t1 = torsion_finite(model, (x, y), CHI, 1).value
        rows.append((float(x), float(y), tilt, t1, abs(tilt - t1)))
    emit(csv_text(["x", "y", "tilt", "torsion_1", "difference"], rows), _csv_path(args, cfg))
    return EXIT_PASS if max(r[-1] for r in rows) < tol else EXIT_FAIL


COMMANDS = {
    "torsion": cmd_torsion,
    "find-zero": cmd_find_zero,
    "sweep": cmd_sweep,
    "certify": cmd_certify,
    "birkhoff": cmd_birkhoff,
    "linking": cmd_linking,
    "tilt": cmd_tilt,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="torsionlab",
                                     description="Torsion of annulus maps: harnesses and sweeps")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="INI run configuration")
    parser.add_argument("--out", help="output path (CSV or JSON depending on the command)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for sweeps and certification "
                             "(TORSIONLAB_THREADS overrides)")
    parser.add_argument("--assume-negative-torsion", action="store_true",
                        help="skip the negative-torsion certification sub-run")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a configuration value (repeatable)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    env = os.environ.get("TORSIONLAB_THREADS")
    try:
        if env is not None:
            try:
                args.threads = int(env)
            except ValueError:
                raise ConfigError(f"TORSIONLAB_THREADS must be an integer, got {env!r}") from None
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.config is not None:
            cfg = load_config(args.config, args.set)
        else:
            cfg = parse_config(f"[meta]\nschema = {SCHEMA_VERSION}\n", "<command line>", args.set)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except TorsionLabError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
