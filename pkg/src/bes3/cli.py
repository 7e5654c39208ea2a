"""Command-line entry point: ``bes3 {simulate,density,laplace,verify,figure1}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
All CSV numbers use ``%.9g``; every CSV starts with a header row.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys

import numpy as np

from . import closed_forms as cf
from .rng import RngStream
from .simulators import (
    FIGURE1_START,
    FIGURE1_STEPS,
    METHODS,
    ConfigError,
    SimConfig,
    path_summary,
    simulate_euler_sde,
    simulate_figure1_walk,
    simulate_norm3d,
    simulate_williams,
    worker_count,
)
from .verification import CHECKS, MUTATIONS, UsageError, run_all

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SUMMARY_ONLY_ABOVE = 1000


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)


def fmt(x: float) -> str:
    return "%.9g" % x


def _positive(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"--{name} must be a number, got {text!r}") from None
        if not (math.isfinite(v) and v > 0):
            raise argparse.ArgumentTypeError(f"--{name} must be > 0, got {text!r}")
        return v
    return parse


def _count(name, minimum=1):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"--{name} must be an integer, got {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"--{name} must be >= {minimum}, got {v}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bes3", description="BES(3) simulation and verification")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate paths and write CSV")
    s.add_argument("--method", choices=METHODS, default="norm3d")
    s.add_argument("--r", type=_positive("r"), default=1.0)
    s.add_argument("--horizon", type=_positive("horizon"), default=1.0)
    s.add_argument("--dt", type=_positive("dt"), default=1e-3)
    s.add_argument("--paths", type=_count("paths"), default=10_000)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--out", default="-")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--summary-only", action="store_true",
                      help="write path_id,terminal,min,argmin_time rows")
    mode.add_argument("--full-paths", action="store_true",
                      help=f"write every grid point even above {SUMMARY_ONLY_ABOVE} paths")

    d = sub.add_parser("density", help="tabulate the density of g")
    d.add_argument("--r", type=_positive("r"), default=1.0)
    d.add_argument("--t-min", type=_positive("t-min"), default=0.01)
    d.add_argument("--t-max", type=_positive("t-max"), default=10.0)
    d.add_argument("--points", type=_count("points"), default=200)
    d.add_argument("--out", default="-")

    lp = sub.add_parser("laplace", help="tabulate E[exp(-lambda g)]")
    lp.add_argument("--r", type=_positive("r"), default=1.0)
    lp.add_argument("--lambda-min", type=float, default=0.0)
    lp.add_argument("--lambda-max", type=_positive("lambda-max"), default=4.0)
    lp.add_argument("--points", type=_count("points"), default=41)
    lp.add_argument("--numeric", action="store_true",
                    help="add a column integrating the density numerically")
    lp.add_argument("--out", default="-")

    v = sub.add_parser("verify", help="run the verification suite")
    v.add_argument("--scenario", default="all",
                   help=f"all or one of: {', '.join(CHECKS)}")
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--paths", type=_count("paths", 100), default=None,
                   help="override the path count of path-based checks")
    v.add_argument("--format", choices=("json", "text"), default="json")
    v.add_argument("--mutation", choices=tuple(MUTATIONS), default=None)
    v.add_argument("--seeds", type=_count("seeds"), default=1,
                   help="sweep seeds seed..seed+k-1 (manual robustness runs)")
    v.add_argument("--out", default="-")

    f = sub.add_parser("figure1", help="random-walk replication of the BES(3) picture")
    f.add_argument("--seed", type=int, default=7)
    f.add_argument("--steps", type=_count("steps"), default=FIGURE1_STEPS)
    f.add_argument("--out", default="-")
    return p


@contextlib.contextmanager
def _open_out(target):
    if target in (None, "-"):
        yield sys.stdout
    else:
        with open(target, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _simulate(args, out):
    cfg = SimConfig(r=args.r, horizon=args.horizon, dt=args.dt, n_paths=args.paths,
                    seed=args.seed, method=args.method)
    summary = args.summary_only or (args.paths > SUMMARY_ONLY_ABOVE and not args.full_paths)
    out.write("path_id,terminal,min,argmin_time\n" if summary else "path_id,t,value\n")
    for i in range(cfg.n_paths):
        rng = RngStream(cfg.seed, i)
        if cfg.method == "norm3d":
            path = simulate_norm3d(cfg, rng)
        elif cfg.method == "euler":
            path = simulate_euler_sde(cfg, rng)
        elif cfg.method == "williams":
            path = simulate_williams(cfg, rng).concatenated()
        else:
            path = simulate_figure1_walk(rng, cfg.n_steps)
        if summary:
            s = path_summary(path)
            out.write(f"{i},{fmt(s.terminal)},{fmt(s.running_min)},{fmt(s.argmin_time)}\n")
        else:
            out.writelines(f"{i},{fmt(t)},{fmt(x)}\n" for t, x in zip(path.times, path.values))
    return EXIT_OK


def _density(args, out):
    if not args.t_min < args.t_max:
        raise UsageError(f"--t-min ({args.t_min}) must be below --t-max ({args.t_max})")
    out.write("t,p\n")
    for t in np.linspace(args.t_min, args.t_max, args.points):
        out.write(f"{fmt(t)},{fmt(cf.g_density(float(t), args.r))}\n")
    return EXIT_OK


def _laplace(args, out):
    if not 0 <= args.lambda_min < args.lambda_max:
        raise UsageError("need 0 <= --lambda-min < --lambda-max")
    out.write("lambda,laplace,numeric\n" if args.numeric else "lambda,laplace\n")
    for lam in np.linspace(args.lambda_min, args.lambda_max, args.points):
        lam = float(lam)
        row = f"{fmt(lam)},{fmt(cf.g_laplace(lam, args.r))}"
        if args.numeric:
            row += f",{fmt(cf.g_laplace_numeric(lam, args.r).value)}"
        out.write(row + "\n")
    return EXIT_OK


def _verify(args, out):
    if args.scenario != "all" and args.scenario not in CHECKS:
        raise UsageError(f"unknown scenario {args.scenario!r}; valid: all, {', '.join(CHECKS)}")
    reports = [run_all(args.seed + k, args.scenario, paths=args.paths, mutation=args.mutation)
               for k in range(args.seeds)]
    for rep in reports:
        print(rep.to_text(), end="", file=sys.stderr)
    if args.seeds == 1:
        rep = reports[0]
        out.write(rep.to_json() if args.format == "json" else rep.to_text())
    else:
        sweep = [{"seed": r.seed, "passed": r.passed,
                  "failed": [c.name for c in r.checks if not c.passed]} for r in reports]
        if args.format == "json":
            out.write(json.dumps({"schema": 1, "sweep": sweep}, indent=2, sort_keys=True) + "\n")
        else:
            out.writelines(f"seed={s['seed']} {'PASS' if s['passed'] else 'FAIL'} "
                           f"{' '.join(s['failed'])}\n" for s in sweep)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _figure1(args, out):
    path = simulate_figure1_walk(RngStream(args.seed, 0), args.steps, FIGURE1_START)
    out.write("k,value\n")
    out.writelines(f"{int(k)},{fmt(x)}\n" for k, x in zip(path.times, path.values))
    return EXIT_OK


COMMANDS = {
    "simulate": _simulate,
    "density": _density,
    "laplace": _laplace,
    "verify": _verify,
    "figure1": _figure1,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        worker_count()  # validate BES3_THREADS up front
        with _open_out(args.out) as out:
            return COMMANDS[args.command](args, out)
    except (UsageError, ConfigError, cf.DomainError) as exc:
        print(f"bes3 {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bes3 {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
