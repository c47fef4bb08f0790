"""Command line interface: ``shapemap <command> CONFIG [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings

import numpy as np
import tomli_w

from . import collapse as col
from .config import Config, load_config, random_base_points, random_jet_points, validation_grid
from .curvature import canonical_curvature, jacobi_plus, r_plus, vertical_identity_residuals
from .errors import ConfigError, DimensionError, DomainError, ExpressionError, LayoutError
from .geometry import commutator_residual, embedded_residual, jet_lift
from .shape import evolution_residual_directional, evolution_residual_total, shape_operator, total_shape, traces

EXIT_OK, EXIT_DOMAIN, EXIT_CONFIG, EXIT_VALIDATE, EXIT_VERIFY = 0, 1, 2, 3, 4
VALIDATE_TOL = 1e-8
VERIFY_TOL = 1e-6


def fmt(x) -> str:
    return format(float(x), ".17g")


def _writer(stream):
    return csv.writer(stream, lineterminator="\r\n")


def _index_label(cfg: Config, kinds: str, idx) -> str:
    """Human index such as ``r.t`` from kinds like ``"dx"`` (d = dependent, x = independent)."""
    names = {"d": cfg.layout.dependent, "x": cfg.layout.independent}
    return ".".join(names[k][i] for k, i in zip(kinds, idx))


def _tensor_rows(cfg, quantity, arr, kinds):
    arr = np.asarray(arr, dtype=float)
    for idx in np.ndindex(arr.shape):
        yield quantity, _index_label(cfg, kinds, idx), arr[idx]


# commands -------------------------------------------------------------------------

def cmd_validate(cfg: Config, args, out) -> int:
    spec = cfg.direction(args.direction)
    worst_e, worst_c, where = 0.0, 0.0, None
    for b in validation_grid(cfg, spec):
        e = embedded_residual(cfg.system, cfg.congruence, b)
        c = commutator_residual(cfg.congruence, b)
        if max(e, c) > max(worst_e, worst_c) or where is None:
            where = b
        worst_e, worst_c = max(worst_e, e), max(worst_c, c)
    n_pts = 5 ** cfg.layout.size("base")
    print(f"embedded residual    max {worst_e:.3e} over {n_pts} points", file=out)
    print(f"commutator residual  max {worst_c:.3e}", file=out)
    if max(worst_e, worst_c) > VALIDATE_TOL:
        coords = ", ".join(f"{nm}={v:.6g}" for nm, v in zip(cfg.layout.base_names, where.dense()))
        print(f"FAIL: worst point {coords}", file=out)
        return EXIT_VALIDATE
    print("ok", file=out)
    return EXIT_OK


def cmd_shape(cfg: Config, args, out) -> int:
    spec = cfg.direction(args.direction)
    lay = cfg.layout
    rows = []
    for b in cfg.points:
        S = shape_operator(cfg.system, cfg.congruence, spec.direction, b)
        T = total_shape(cfg.system, cfg.congruence, spec.direction, b)
        tr, form = traces(S, T, spec.direction, b)
        coords = b.dense()
        for q, idx, val in [*_tensor_rows(cfg, "A", S.A, "dd"), *_tensor_rows(cfg, "Atotal", T.A, "ddx"),
                            ("trace", "", tr), *_tensor_rows(cfg, "traceform", form, "x")]:
            rows.append((coords, q, idx, val))
    _emit_points(cfg, args, out, rows, lay.base_names)
    return EXIT_OK


def cmd_curvature(cfg: Config, args, out) -> int:
    spec = cfg.direction(args.direction)
    d = spec.direction
    points = cfg.jet_points
    if not points:
        points = [jet_lift(cfg.congruence, b) for b in cfg.points]
    rows = []
    for p in points:
        cc = canonical_curvature(cfg.system, p, d)
        phi = jacobi_plus(cfg.system, d, p)
        rp = r_plus(cfg.system, d, p)
        coords = p.dense()
        for q, idx, val in [*_tensor_rows(cfg, "R", cc.B, "dxxx"), *_tensor_rows(cfg, "R_plus", cc.R_plus, "dxx"),
                            *_tensor_rows(cfg, "Phi_plus", phi, "dxd"), *_tensor_rows(cfg, "r_plus_c", rp.c, "dxxd"),
                            *_tensor_rows(cfg, "r_plus_d", rp.d, "dxx")]:
            rows.append((coords, q, idx, val))
    _emit_points(cfg, args, out, rows, cfg.layout.names)
    return EXIT_OK


def _emit_points(cfg, args, out, rows, names):
    if args.csv:
        w = _writer(out)
        w.writerow([*names, "quantity", "index", "value"])
        for coords, q, idx, val in rows:
            w.writerow([*map(fmt, coords), q, idx, fmt(val)])
        return
    last = None
    for coords, q, idx, val in rows:
        if coords != last:
            print("point " + " ".join(f"{nm}={c:.10g}" for nm, c in zip(names, coords)), file=out)
            last = coords
        label = f"{q}[{idx}]" if idx else q
        print(f"  {label:<24} {val: .12g}", file=out)


def cmd_collapse(cfg: Config, args, out) -> int:
    spec = cfg.direction(args.direction)
    run = cfg.run
    opts = col.ScanOptions(h=args.h or run["h"], vol_min=run["vol_min"], C_big=run["C_big"],
                           C_max=run["C_max"], mu0=run["mu0"])
    rep = col.collapse_scan(cfg.system, cfg.congruence, spec.direction, spec.start, spec.span, opts)
    if args.csv:
        w = _writer(out)
        w.writerow(["s", *cfg.layout.base_names, "C", "logVolume", "mu"])
        for smp in rep.samples:
            w.writerow([fmt(smp.s), *map(fmt, smp.point.dense()), fmt(smp.C), fmt(smp.logVolume), fmt(smp.mu)])
        return EXIT_OK
    a = cfg.layout.independent[spec.direction.adapted]
    start = spec.start.dense()[spec.direction.adapted]
    print(f"direction       {spec.name} (adapted {a}, start {a}={start:.10g})", file=out)
    print(f"detected        {'yes' if rep.detected else 'no'}", file=out)
    print(f"reason          {rep.reason}", file=out)
    if rep.message:
        print(f"message         {rep.message}", file=out)
    if rep.s_detect is not None:
        print(f"s_detect        {rep.s_detect:.10g}   ({a} = {start + rep.s_detect:.10g})", file=out)
    if rep.s_extrapolated is not None:
        print(f"s_extrapolated  {rep.s_extrapolated:.10g}   ({a} = {start + rep.s_extrapolated:.10g})", file=out)
    last = rep.samples[-1] if rep.samples else None
    if last is not None:
        print(f"samples         {len(rep.samples)}; last C = {last.C:.6g}, logVolume = {last.logVolume:.6g}, "
              f"mu = {last.mu:.6g}", file=out)
    return EXIT_OK


def cmd_verify(cfg: Config, args, out) -> int:
    names = [args.direction] if args.direction else list(cfg.directions)
    count = args.n if args.n is not None else cfg.run["n_verify"]
    seed = args.seed if args.seed is not None else cfg.run["seed"]
    jets = random_jet_points(cfg, count, seed)
    bases = random_base_points(cfg, count, seed)
    worst_all = 0.0
    for name in names:
        d = cfg.direction(name).direction
        worst = dict.fromkeys(["res_242", "res_244", "res_324", "shape_directional", "shape_total"], 0.0)
        for p in jets:
            for k, v in vertical_identity_residuals(cfg.system, d, p).items():
                worst[k] = max(worst[k], v)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for b in bases:
                worst["shape_directional"] = max(worst["shape_directional"], float(np.max(np.abs(
                    evolution_residual_directional(cfg.system, cfg.congruence, d, b)))))
                worst["shape_total"] = max(worst["shape_total"], float(np.max(np.abs(
                    evolution_residual_total(cfg.system, cfg.congruence, d, b)))))
        labels = {
            "res_242": "vertical curvature (full)",
            "res_244": "vertical curvature (partial)",
            "res_324": "projector evolution",
            "shape_directional": "directional shape evolution",
            "shape_total": "total shape evolution",
        }
        print(f"direction {name}: {count} points, seed {seed:#x}", file=out)
        for k, v in worst.items():
            print(f"  {labels[k]:<30} max {v:.3e}", file=out)
        worst_all = max(worst_all, *worst.values())
    if worst_all > VERIFY_TOL:
        print(f"FAIL: largest residual {worst_all:.3e} exceeds {VERIFY_TOL:g}", file=out)
        return EXIT_VERIFY
    print("ok", file=out)
    return EXIT_OK


def cmd_surface(cfg: Config, args, out) -> int:
    sf = cfg.surface
    if sf is None:
        raise ConfigError("config has no [surface] section", cfg.path)
    spec = cfg.direction(args.direction or sf.direction)
    starts = col.initial_points(cfg.layout, sf.variable, sf.values, sf.base, sf.initial)
    rows = col.surface_sample(cfg.congruence, spec.direction, starts, sf.span, sf.h, sf.stride)
    w = _writer(out)
    w.writerow(["s", "label", *cfg.layout.base_names])
    for s, label, point in rows:
        w.writerow([fmt(s), fmt(label), *map(fmt, point)])
    return EXIT_OK


HELP = {
    "validate": "check embeddedness and integrability on a grid around the start",
    "shape": "shape operators and traces at the configured points",
    "curvature": "curvature tensors at the configured jet points",
    "collapse": "integrate the trace along a congruence curve and report collapse",
    "verify": "identity and evolution residuals at seeded random points",
    "surface": "sample the solution surface swept by congruence curves",
}

COMMANDS = {
    "validate": cmd_validate,
    "shape": cmd_shape,
    "curvature": cmd_curvature,
    "collapse": cmd_collapse,
    "verify": cmd_verify,
    "surface": cmd_surface,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shapemap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("config", help="TOML config file (bundled examples are found by name)")
        p.add_argument("--direction", help="direction name or independent coordinate")
        p.add_argument("--csv", action="store_true", help="machine-readable CSV output")
        p.add_argument("-o", "--output", help="write output to this file")
        p.add_argument("--dump-config", action="store_true", help="print the normalised config and exit")
        if name == "collapse":
            p.add_argument("--h", type=float, help="override the step size")
        if name == "verify":
            p.add_argument("-n", type=int, help="number of random points")
            p.add_argument("--seed", type=lambda s: int(s, 0), help="random seed")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.dump_config:
            sys.stdout.write(tomli_w.dumps(cfg.to_dict()))
            return EXIT_OK
        buf = io.StringIO(newline="")
        code = COMMANDS[args.command](cfg, args, buf)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return code
    except ConfigError as err:
        loc = f"{err.location}: " if err.location else ""
        print(f"shapemap: config error: {loc}{err.args[0].removeprefix(loc)}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExpressionError, LayoutError, DimensionError) as err:
        print(f"shapemap: config error: {args.config}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as err:
        print(f"shapemap: domain error: {err}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
