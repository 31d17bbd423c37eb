"""Command-line front end: ``sdosc <command> [options]``.

Every command accepts ``--config FILE`` (key = value lines, the keys being
the long option names) and ``--out DIR``.  Options given on the command line
win over the config file.  Without ``--out`` the main artifact goes to stdout.

Exit codes: 0 ok, 1 verify failed, 2 usage, 3 domain error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import melnikov as mk
from .errors import DomainError, NonFiniteError, NumericalError
from .model import CHARTS, SD, PhasePoint, make_params
from .output import (CURVE_HEADER, TRAJECTORY_HEADER, csv_text, curve_rows, dump_config,
                     json_text, parse_config, trajectory_rows, validate, write_atomic)

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3, 4
CURVES = ("hopf", "grazing", "dl1", "dl2", "b1", "b2", "b3")


class UsageError(Exception):
    pass


def floats(text):
    """Comma-separated floats."""
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def window(text):
    v = floats(text)
    if len(v) != 4:
        raise argparse.ArgumentTypeError("window is xmin,xmax,ymin,ymax")
    return tuple(v)


def seeds(text):
    """Seed points as 'x:y;x:y'."""
    out = []
    for item in str(text).split(";"):
        if not item.strip():
            continue
        try:
            x, y = item.split(":")
            out.append((float(x), float(y)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad seed {item!r}; use x:y;x:y")
    return out


# -- output helpers --------------------------------------------------------------

def emit(args, name, text):
    if args.out:
        write_atomic(os.path.join(args.out, name), text)
    else:
        sys.stdout.write(text)


def emit_json(args, name, obj, schema):
    validate(obj, schema)
    emit(args, name, json_text(obj))


def record_config(args):
    if not args.out:
        return
    skip = {"func", "out", "config"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    if "seeds" in cfg:
        cfg["seeds"] = ";".join(f"{x!r}:{y!r}" for x, y in cfg["seeds"])
    write_atomic(os.path.join(args.out, f"{args.command}.cfg"), dump_config(cfg))


# -- commands ------------------------------------------------------------------

def cmd_simulate(args):
    from .integrator import IntegratorCtrl, flow, negative_x_axis, positive_x_axis
    p = make_params(args.a, args.b, args.delta)
    stop = {"none": [], "positive_x": [positive_x_axis()], "negative_x": [negative_x_axis()]}[args.stop]
    ctrl = IntegratorCtrl(t_max=args.t_max)
    tr = flow(PhasePoint(args.x, args.y, args.chart), p, stop, ctrl,
              time_direction=args.direction, store="steps")
    emit(args, "trajectory.csv", csv_text(TRAJECTORY_HEADER, trajectory_rows(tr, args.chart)))
    return EXIT_OK


def cmd_cycles(args):
    from .poincare import count_by_kind, find_cycles
    p = make_params(args.a, args.b, args.delta)
    cyc = find_cycles(p)
    obj = {"params": {"a": p.a, "b": p.b, "delta": p.delta},
           "cycles": [c.to_dict(with_points=args.points) for c in cyc],
           "counts": count_by_kind(cyc)}
    emit_json(args, "cycles.json", obj, "cycles")
    return EXIT_OK


def cmd_melnikov(args):
    a, b = args.a, args.b
    obj = {"a": a, "b": b, "h": args.h, "M": None, "M1": None, "M2": None, "M3": None,
           "M0": mk.melnikov(0.0, a, b), "M1_0": mk.melnikov_deriv(0.0, a, b, 1),
           "partials": None, "zeros": None, "region": None}
    if args.h is not None:
        h = args.h
        obj["M"] = mk.melnikov(h, a, b)
        obj["M1"] = mk.melnikov_deriv(h, a, b, 1)
        if h > 0:
            obj["M2"] = mk.melnikov_deriv(h, a, b, 2)
            obj["M3"] = mk.melnikov_deriv(h, a, b, 3)
        obj["partials"] = mk.melnikov_partials(h, a, b)
    if b < mk.b_hopf(a):
        obj["zeros"] = mk.melnikov_zeros(a, b).to_dict()
        obj["region"] = mk.classify_region_D(a, b)
    emit_json(args, "melnikov.json", obj, "melnikov")
    return EXIT_OK


def _a_values(args):
    if args.a is not None:
        return np.asarray(args.a, dtype=float)
    if args.a_min is None or args.a_max is None:
        raise UsageError("give --a or both --a-min and --a-max")
    return np.geomspace(args.a_min, args.a_max, args.n)


def trace_curve(kind, a_grid, delta):
    from .bifurcation import hopf_b, trace_double_cycle, trace_grazing
    if kind == "hopf":
        return [mk.CurveSample(float(a), hopf_b(a), delta, "hopf", 0.0, True) for a in a_grid]
    if kind == "grazing":
        return trace_grazing(a_grid, delta)
    if kind in ("dl1", "dl2"):
        return trace_double_cycle(kind, a_grid, delta)
    return mk.trace_melnikov_curve(kind, a_grid)


def cmd_trace(args):
    if args.curve in ("grazing", "dl1", "dl2") and args.delta is None:
        raise UsageError(f"--delta is required for the {args.curve} curve")
    delta = args.delta if args.delta is not None else 0.0
    rows = curve_rows(trace_curve(args.curve, _a_values(args), delta))
    emit(args, f"{args.curve}.csv", csv_text(CURVE_HEADER, rows))
    return EXIT_OK


def cmd_classify(args):
    from .bifurcation import REGION_INVENTORY, local_slice, classify_global
    points = []
    for a in args.a:
        sl = local_slice(a, args.delta)
        for b in args.b:
            label = classify_global(a, b, args.delta, sl)
            mreg = mk.classify_region_D(a, b)["label"] if b < mk.b_hopf(a) else None
            points.append({"a": a, "b": b, "delta": args.delta, "label": label,
                           "inventory": REGION_INVENTORY.get(label),
                           "melnikov_region": mreg,
                           "curves": {k: sl.curve_at(k, a) for k in ("hopf", "grazing", "dl1", "dl2")}})
    emit_json(args, "classify.json", {"points": points}, "classify")
    return EXIT_OK


def cmd_slice(args):
    from .bifurcation import diagram_slice
    if not args.out:
        raise UsageError("slice writes several files; --out is required")
    grid = np.geomspace(args.a_min, args.a_max, args.n)
    sl = diagram_slice(args.delta, grid)

    def write(kind):
        write_atomic(os.path.join(args.out, f"{kind}.csv"),
                     csv_text(CURVE_HEADER, curve_rows(sl.curves()[kind])))

    # one task per file
    with ThreadPoolExecutor(max_workers=4) as ex:
        list(ex.map(write, ("hopf", "grazing", "dl1", "dl2")))
    obj = {"delta": args.delta, "a_range": [float(grid[0]), float(grid[-1])],
           "a0_estimate": sl.a0_estimate, "P": [list(p) for p in sl.P], "Q": [list(q) for q in sl.Q],
           "melnikov_special_points": mk.special_points().to_dict()}
    emit_json(args, "slice.json", obj, "slice")
    return EXIT_OK


def cmd_portrait(args):
    from .integrator import IntegratorCtrl, flow
    from .poincare import find_cycles
    from .portrait import PortraitSpec, auto_window, emit_portrait_svg
    p = make_params(args.a, args.b, args.delta)
    cyc = find_cycles(p) if args.cycles else []
    ctrl = IntegratorCtrl(t_max=args.t_max)
    trs = [flow(PhasePoint(x, y, args.chart), p, [], ctrl) for x, y in (args.seeds or [])]
    win = args.window or auto_window(p, cyc, trs, args.chart)
    spec = PortraitSpec(win, tuple(args.seeds or ()), args.chart, args.nullcline,
                        args.switching_line, args.cycles, True)
    emit(args, "portrait.svg", emit_portrait_svg(spec, p, cyc, trs))
    return EXIT_OK


def cmd_verify(args):
    from .acceptance import run_all
    checks = run_all(args.seed, set(args.only) if args.only else None)
    for c in checks:
        print(c.line(), file=sys.stderr if not args.out else sys.stdout)
    ok = all(c.passed for c in checks)
    obj = {"seed": args.seed, "passed": ok, "checks": [c.to_dict() for c in checks]}
    emit_json(args, "verify.json", obj, "verify")
    return EXIT_OK if ok else EXIT_VERIFY


# -- parser --------------------------------------------------------------------

def _params(sp, list_ab=False, need_delta=True):
    t = floats if list_ab else float
    sp.add_argument("--a", type=t, help="a > 1" + (" (comma list)" if list_ab else ""))
    sp.add_argument("--b", type=t, help="b" + (" (comma list)" if list_ab else ""))
    if need_delta:
        sp.add_argument("--delta", type=float, help="delta > 0")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="key = value file; command-line options override it")
    common.add_argument("--seed", type=int, default=None, help="seed for randomised batteries")

    ap = argparse.ArgumentParser(prog="sdosc", description="SD-type oscillator toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", parents=[common], help="integrate one orbit to CSV")
    _params(sp)
    sp.add_argument("--x", type=float, default=0.0)
    sp.add_argument("--y", type=float, default=-1.0)
    sp.add_argument("--chart", choices=CHARTS, default="LIENARD")
    sp.add_argument("--direction", choices=("forward", "backward"), default="forward")
    sp.add_argument("--stop", choices=("none", "positive_x", "negative_x"), default="none")
    sp.add_argument("--t-max", type=float, default=100.0)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("cycles", parents=[common], help="limit cycles to JSON")
    _params(sp)
    sp.add_argument("--points", action="store_true", help="include sampled cycle points")
    sp.set_defaults(func=cmd_cycles)

    sp = sub.add_parser("melnikov", parents=[common], help="first-order Melnikov function to JSON")
    _params(sp, need_delta=False)
    sp.add_argument("--h", type=float, help="energy level h >= 0")
    sp.set_defaults(func=cmd_melnikov)

    sp = sub.add_parser("trace", parents=[common], help="trace a curve to CSV")
    sp.add_argument("--curve", choices=CURVES, required=False)
    sp.add_argument("--a", type=floats, help="a values (comma list)")
    sp.add_argument("--a-min", type=float)
    sp.add_argument("--a-max", type=float)
    sp.add_argument("--n", type=int, default=40)
    sp.add_argument("--delta", type=float)
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("classify", parents=[common], help="region labels for a point or grid")
    _params(sp, list_ab=True)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("slice", parents=[common], help="bifurcation curves at fixed delta")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--a-min", type=float, default=1.02)
    sp.add_argument("--a-max", type=float, default=5.0)
    sp.add_argument("--n", type=int, default=60)
    sp.set_defaults(func=cmd_slice)

    sp = sub.add_parser("portrait", parents=[common], help="phase portrait as SVG")
    _params(sp)
    sp.add_argument("--window", type=window, help="xmin,xmax,ymin,ymax")
    sp.add_argument("--seeds", type=seeds, help="orbit seeds 'x:y;x:y'")
    sp.add_argument("--chart", choices=CHARTS, default=SD)
    sp.add_argument("--t-max", type=float, default=60.0)
    for flag in ("nullcline", "switching-line", "cycles"):
        sp.add_argument(f"--{flag}", action=argparse.BooleanOptionalAction, default=True)
    sp.set_defaults(func=cmd_portrait)

    sp = sub.add_parser("verify", parents=[common], help="run the acceptance battery")
    sp.add_argument("--only", type=lambda s: [int(v) for v in s.split(",")],
                    help="criterion numbers (comma list)")
    sp.set_defaults(func=cmd_verify)
    return ap


REQUIRED = {"simulate": ("a", "b", "delta"), "cycles": ("a", "b", "delta"),
            "melnikov": ("a", "b"), "trace": ("curve",), "classify": ("a", "b", "delta"),
            "slice": ("delta",), "portrait": ("a", "b", "delta"), "verify": ()}


def parse(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        except (OSError, ValueError) as e:
            ap.error(f"config: {e}")
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(cfg) - known - {"command"})
        if bad:
            ap.error(f"config: unknown keys {', '.join(bad)}")
        cfg.pop("command", None)
        for k, v in cfg.items():  # bool flags come through as strings
            if v.lower() in ("true", "false"):
                cfg[k] = v.lower() == "true"
        sub.set_defaults(**cfg)  # string defaults are converted by each option's type
        args = ap.parse_args(argv)
    if args.command == "verify" and args.seed is None:
        from .acceptance import DEFAULT_SEED
        args.seed = DEFAULT_SEED
    missing = [k for k in REQUIRED[args.command] if getattr(args, k) is None]
    if missing:
        ap.error("missing " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return args


def main(argv=None):
    try:
        args = parse(sys.argv[1:] if argv is None else argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.out:
            os.makedirs(args.out, exist_ok=True)
        code = args.func(args)
        record_config(args)
        return code
    except UsageError as e:
        print(f"sdosc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as e:
        print(f"sdosc: domain error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalError, NonFiniteError) as e:
        print(f"sdosc: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"sdosc: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
