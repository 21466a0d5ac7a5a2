"""Command-line entry point.

    losdivert validate [--customers N] [--pk-tol T] [--little-tol T]
    losdivert run CONFIG [--policy P] [--reps R] [--horizon H] [--warmup W]
                         [--seed S] [--jobs J] [--trace PATH] [--out DIR]
                         [--set section.key=value ...]

Exit codes: 0 success, 2 config error, 3 check failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .config import ConfigError, bundled_configs, parse_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHECK = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="losdivert",
        description="Outpatient facility network simulation with LOS-based patient diversion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    val = sub.add_parser("validate", help="run the analytic and numerical self-checks")
    val.add_argument("--customers", type=int, default=1_000_000,
                     help="customers served in the M/G/1 check (default: %(default)s)")
    val.add_argument("--pk-tol", type=float, default=0.03,
                     help="relative tolerance of the M/G/1 check (default: %(default)s)")
    val.add_argument("--little-tol", type=float, default=0.02,
                     help="relative tolerance of the Little's law check (default: %(default)s)")
    val.add_argument("--little-days", type=int, default=200,
                     help="simulated days for the Little's law check (default: %(default)s)")

    run = sub.add_parser("run", help="run a scenario and write report.csv and summary.txt",
                         epilog="bundled configs: " + ", ".join(bundled_configs()))
    run.add_argument("config", help="config file, or the name of a bundled config")
    run.add_argument("--policy", action="append", choices=("none", "predicted", "oracle"),
                     help="policy to run; repeat for several (default: those in the config)")
    run.add_argument("--reps", type=int, help="replications")
    run.add_argument("--horizon", type=int, help="simulated days per replication")
    run.add_argument("--warmup", type=int, help="leading days excluded from statistics")
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                     help="worker processes (default: %(default)s)")
    run.add_argument("--trace", metavar="PATH", help="write the event trace of replication 0")
    run.add_argument("--out", metavar="DIR", help="output directory (default: from the config)")
    run.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[],
                     dest="overrides", help="override any config key; may be repeated")
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        out[key.strip()] = value.strip()
    flags = {"replications": args.reps, "horizon_days": args.horizon,
             "warmup_days": args.warmup, "seed": args.seed}
    for key, value in flags.items():
        if value is not None:
            out[f"scenario.{key}"] = str(value)
    if args.policy:
        out["scenario.policies"] = ", ".join(dict.fromkeys(args.policy))
    return out


def cmd_validate(args) -> int:
    from .checks import run_all

    results = run_all(args.customers, args.pk_tol, args.little_tol, args.little_days)
    for r in results:
        print(r)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_run(args) -> int:
    from .metrics import run_scenario

    try:
        cfg = parse_config(args.config, _overrides(args))
    except (FileNotFoundError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or cfg.output_dir

    trace_fh = None
    try:
        if args.trace:
            trace_fh = open(args.trace, "w")
        started = time.perf_counter()
        trace = None if trace_fh is None else (lambda line: trace_fh.write(line + "\n"))
        report = run_scenario(cfg, jobs=args.jobs, trace=trace)
        csv_path, txt_path = report.write(out_dir)
    except OSError as exc:
        print(f"error: {exc.filename or out_dir}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        if trace_fh is not None:
            trace_fh.close()

    print(report.summary())
    print(f"wrote {csv_path} and {txt_path}"
          + (f" and {args.trace}" if args.trace else "")
          + f" in {time.perf_counter() - started:.1f} s")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
