"""Command-line entry point: ``boolcov {analytic,roots,simulate,verify,figure}``."""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import analytic as A
from . import curves
from .finite_window import finite_window_matrix_2d
from .geometry import Window
from .reporting import RunManifest, config_hash, write_csv, write_json
from .simulate import ConfigInvalid, config_from_dict, normality_report, run

QUANTITIES = ("sigma", "correlation", "rho", "mean-density", "finite-window")


class InvalidGrid(ValueError):
    pass


def parse_grid(start: float, stop: float, step: float, strictly_positive: bool = False) -> np.ndarray:
    if not all(math.isfinite(v) for v in (start, stop, step)):
        raise InvalidGrid("grid values must be finite")
    if step <= 0:
        raise InvalidGrid("step must be positive")
    if stop < start:
        raise InvalidGrid("stop must be >= start")
    if start < 0 or (strictly_positive and start <= 0):
        raise InvalidGrid("start must be > 0" if strictly_positive else "start must be >= 0")
    return curves._grid(start, stop, step)


def _entry(text: str | None):
    if text is None:
        return None
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"entry must look like 'i,j', got {text!r}") from None
    return min(i, j), max(i, j)


def _pairs(d: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(d + 1) for j in range(i, d + 1)]


def _sigma_row(d: int, g: float):
    """(keys, values, errors) of the sigma table at one gamma."""
    if d == 1:
        params = A.ModelParams.unit_ball(1, g)
        return [(1, 1)], [A.sigma_vol_vol(params) if g > 0 else 0.0], [0.0]
    if d == 2:
        rep = A.sigma_matrix_2d(g)
        keys = _pairs(2)
    else:
        rep = A.sigma_surface_volume_report(A.ModelParams.unit_ball(d, g))
        keys = [(d - 1, d - 1), (d - 1, d), (d, d)]
    return keys, [rep[k] for k in keys], [rep.err(*k) for k in keys]


def _correlation(d: int, g: float, entry):
    keys, vals, errs = _sigma_row(d, g)
    tab = dict(zip(keys, zip(vals, errs)))
    i, j = entry or (d - 1, d)
    if (i, j) not in tab or (i, i) not in tab or (j, j) not in tab:
        raise curves.UnknownQuantity(f"correlation entry {i},{j} unavailable for d = {d}")
    (c, ec), (a, ea), (b, eb) = tab[(i, j)], tab[(i, i)], tab[(j, j)]
    r = c / math.sqrt(a * b)
    # first-order propagation of the quadrature error estimates
    err = abs(r) * (ec / max(abs(c), 1e-300) + 0.5 * ea / a + 0.5 * eb / b)
    return r, err


def analytic_table(quantity: str, d: int, gammas, entry=None, side: float = 10.0):
    """Header and rows of one ``analytic`` CSV."""
    if quantity not in QUANTITIES:
        raise curves.UnknownQuantity(quantity)
    if quantity in ("rho", "finite-window") and d != 2:
        raise curves.UnknownQuantity(f"{quantity} is implemented for d = 2")
    if quantity == "correlation" and d < 2:
        raise curves.UnknownQuantity("correlation needs d >= 2")
    rows = []
    if quantity == "correlation":
        for g in gammas:
            rows.append([g, *_correlation(d, g, entry)])
        return ["gamma", "value", "err_est"], rows
    if quantity == "mean-density":
        for g in gammas:
            params = A.ModelParams.unit_ball(d, g)
            rows.append([g] + [A.mean_density(i, params) for i in range(d + 1)])
        if entry is not None:
            i = entry[1]
            return ["gamma", "value", "err_est"], [[r[0], r[1 + i], 0.0] for r in rows]
        return ["gamma"] + [f"v{i}" for i in range(d + 1)], rows

    def table(g):
        if quantity == "sigma":
            return _sigma_row(d, g)
        if quantity == "rho":
            rep = A.rho_matrix_unit_disk(g)
            keys = _pairs(2)
            return keys, [rep[k] for k in keys], [rep.err(*k) for k in keys]
        m = finite_window_matrix_2d(g, Window.box(side, side))
        keys = _pairs(2)
        return keys, [m[k] for k in keys], [0.0] * len(keys)

    prefix = {"sigma": "s", "rho": "rho", "finite-window": "cov"}[quantity]
    header = None
    for g in gammas:
        keys, vals, errs = table(g)
        if entry is not None:
            if entry not in keys:
                raise curves.UnknownQuantity(f"{quantity} entry {entry} unavailable for d = {d}")
            k = keys.index(entry)
            header = ["gamma", "value", "err_est"]
            rows.append([g, vals[k], errs[k]])
        else:
            names = [f"{i}{j}" for i, j in keys]
            header = ["gamma"] + [prefix + n for n in names] + ["err" + n for n in names]
            rows.append([g, *vals, *errs])
    return header, rows


# --------------------------------------------------------------------------
# commands


def _manifest(args, config: dict, paths, seed=None, name=None) -> Path:
    # one manifest per primary output so several commands can share an out-dir
    m = RunManifest(command=" ".join(["boolcov", *args.argv]), config=config, master_seed=seed)
    for p in paths:
        m.add(p)
    return m.write(args.out_dir, name or f"{Path(paths[0]).stem}.manifest.json")


def cmd_analytic(args) -> int:
    gammas = parse_grid(*args.grid, strictly_positive=args.quantity == "correlation")
    header, rows = analytic_table(args.quantity, args.d, gammas, args.entry, args.side)
    tag = "" if args.entry is None else f"{args.entry[0]}{args.entry[1]}"
    config = {
        "quantity": args.quantity,
        "d": args.d,
        "grid": list(args.grid),
        "entry": args.entry,
        "side": args.side if args.quantity == "finite-window" else None,
        "tol": args.tol,
    }
    path = write_csv(Path(args.out_dir) / f"{args.quantity}{tag}_d{args.d}.csv", header, rows, config)
    _manifest(args, config, [path])
    print(path)
    return 0


def cmd_roots(args) -> int:
    lo, hi, step = args.range
    f = curves.curve(args.curve, args.d)
    report = {
        "curve": args.curve,
        "d": args.d,
        "range": [lo, hi],
        "step": step,
        "zeros": curves.zeros(f, lo, hi, step),
        "extrema": curves.extrema(f, lo, hi, step),
    }
    path = write_json(Path(args.out_dir) / f"roots_{args.curve}_d{args.d}.json", report)
    _manifest(args, {k: report[k] for k in ("curve", "d", "range", "step")}, [path])
    print(json.dumps(report, indent=2))
    return 0


def cmd_simulate(args) -> int:
    try:
        obj = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid("<file>", str(exc)) from None
    cfg = config_from_dict(obj, seed=args.seed)
    sim = run(cfg)
    conf = cfg.as_dict()
    out = Path(args.out_dir)
    rows = [[k, *v] for k, v in enumerate(sim.values)]
    csv_path = write_csv(out / "replicates.csv", ["replicate_index", *sim.labels], rows, conf)
    summary = sim.summary()
    summary["config"] = conf
    summary["config_hash"] = config_hash(conf)
    if sim.n >= 1000:
        summary["normality"] = normality_report(sim).as_dict()
    js_path = write_json(out / "summary.json", summary)
    _manifest(args, conf, [csv_path, js_path], seed=cfg.master_seed, name="manifest.json")
    print(json.dumps({k: summary[k] for k in ("labels", "means", "mean_se")}, indent=2))
    return 0


def cmd_verify(args) -> int:
    from . import verification as V

    numbers = V.QUICK if args.level == "quick" else V.FULL
    results = V.run_criteria(numbers, progress=lambda r: print(r.line(), flush=True))
    print()
    print(V.format_report(results))
    payload = {
        "level": args.level,
        "passed": all(r.passed for r in results),
        "criteria": [
            {
                "number": r.number,
                "name": r.name,
                "passed": r.passed,
                "seconds": r.seconds,
                "checks": [
                    {"label": c.label, "measured": repr(c.measured), "expected": c.expected, "ok": c.ok}
                    for c in r.checks
                ],
            }
            for r in results
        ],
    }
    path = write_json(Path(args.out_dir) / f"verify_{args.level}.json", payload)
    _manifest(args, {"level": args.level}, [path])
    return 0 if payload["passed"] else 1


def cmd_figure(args) -> int:
    grid = tuple(args.grid) if args.grid else None
    if grid:
        parse_grid(*grid, strictly_positive=True)
    header, data = curves.figure_table(args.number, grid)
    config = {"figure": args.number, "grid": grid, "tol": args.tol}
    path = write_csv(Path(args.out_dir) / f"figure{args.number}.csv", header, data, config)
    _manifest(args, config, [path])
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config file)")
    common.add_argument("--out-dir", default="boolcov_out", help="output directory")
    common.add_argument("--tol", type=float, default=None, help="relative quadrature tolerance")

    p = argparse.ArgumentParser(prog="boolcov", description=__doc__)
    p.add_argument("--version", action="version", version=f"boolcov {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analytic", parents=[common], help="tabulate an analytic quantity over a gamma grid")
    a.add_argument("quantity", help="|".join(QUANTITIES))
    a.add_argument("--d", type=int, default=2)
    a.add_argument("--grid", type=float, nargs=3, metavar=("START", "STOP", "STEP"), default=None)
    a.add_argument("--entry", type=_entry, default=None, help="single matrix entry 'i,j'")
    a.add_argument("--side", type=float, default=10.0, help="square window side for finite-window")
    a.set_defaults(func=cmd_analytic)

    r = sub.add_parser("roots", parents=[common], help="zeros and extrema of a named curve")
    r.add_argument("curve", help="e.g. sigma01, sigma02, sigma12, sigma_surf_vol, correlation")
    r.add_argument("--d", type=int, default=2)
    r.add_argument("--range", type=float, nargs=3, metavar=("LO", "HI", "STEP"), default=(0.005, 4.0, 0.01))
    r.set_defaults(func=cmd_roots)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo run from a JSON config")
    s.add_argument("config")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("figure", parents=[common], help="write the data behind one figure as CSV")
    f.add_argument("number", type=int, choices=(1, 2, 3, 4))
    f.add_argument("--grid", type=float, nargs=3, metavar=("START", "STOP", "STEP"), default=None)
    f.set_defaults(func=cmd_figure)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    if args.command == "analytic" and args.grid is None:
        args.grid = (0.01, 2.0, 0.01) if args.d == 2 else (0.01, 1.2, 0.01)
    if args.tol is not None and not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return 2
    ctx = A.tolerance(args.tol) if args.tol is not None else contextlib.nullcontext()
    try:
        with ctx:
            return args.func(args)
    except ConfigInvalid as exc:
        print(f"error: invalid config field {exc.field!r}: {exc}", file=sys.stderr)
        return 2
    except (curves.UnknownQuantity, InvalidGrid) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
