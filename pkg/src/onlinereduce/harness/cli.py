"""Command line front end: ``python -m onlinereduce <command>``.

Exit status is 0 on success, 1 when a check or bound fails, 2 on a bad
config or bad arguments.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..exceptions import CapacityError, ConfigError, EndOfTrace, OnlineReduceError
from ..processes import parse_partition, read_trace, smv_audit
from .config import load_config
from .run import SweepFailure, run_experiment, sweep
from .verify import SCOPES, verify_suite

EXIT_OK, EXIT_CHECK, EXIT_CONFIG = 0, 1, 2


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    try:
        curve = run_experiment(cfg)
    except EndOfTrace as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.output or cfg.output
    if out:
        curve.write_csv(out)
    else:
        sys.stdout.write(curve.to_csv())
    for t, name in curve.violation_log[:20]:
        print(f"violation: step {t}: {name}", file=sys.stderr)
    return EXIT_CHECK if curve.violations else EXIT_OK


def _cmd_sweep(args) -> int:
    if not Path(args.config_dir).is_dir():
        raise ConfigError(f"{args.config_dir} is not a directory")
    paths = sorted(Path(args.config_dir).glob("*.ini"))
    loaded = {}
    for p in paths:
        try:
            loaded[p] = load_config(p)
        except ConfigError as exc:
            loaded[p] = SweepFailure(p.stem, f"ConfigError: {exc}")
    runnable = [p for p in paths if not isinstance(loaded[p], SweepFailure)]
    results = dict(zip(runnable, sweep([loaded[p] for p in runnable], jobs=args.jobs)))
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    print("config,status,T,avg_loss,violations")
    for path in paths:
        res = results.get(path, loaded[path])
        if isinstance(res, SweepFailure):
            print(f"{path.stem},error,,,")
            print(f"{path.stem}: {res.error}", file=sys.stderr)
            status = EXIT_CHECK
            continue
        if out_dir:
            res.write_csv(out_dir / f"{path.stem}.csv")
        row = res.final
        ok = "ok" if row.violations == 0 else "violations"
        print(f"{path.stem},{ok},{row.T},{row.avg_loss:.17g},{row.violations}")
        if row.violations:
            status = EXIT_CHECK
    return status


def _cmd_verify(args) -> int:
    results = verify_suite(args.scope)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


def _cmd_smv(args) -> int:
    try:
        trace = read_trace(args.trace_file)
        partition = parse_partition(args.partition)
        cps = sorted({int(c) for item in args.checkpoints for c in str(item).split(",") if c})
        rows = smv_audit(trace, partition, cps)
    except (OSError, ValueError, OnlineReduceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print("T,distinct_cells,ratio")
    for T, cells, ratio in rows:
        print(f"{T},{cells},{ratio:.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onlinereduce", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment config and print its loss curve CSV")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="write the CSV here instead of stdout")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run every *.ini config of a directory")
    p.add_argument("config_dir")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", help="write one CSV per config here")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run the built-in property checks")
    p.add_argument("--scope", default="all", choices=("all",) + SCOPES)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("smv-check", help="count distinct partition cells visited by a trace")
    p.add_argument("trace_file")
    p.add_argument("--partition", required=True, help="dyadic:<a> or grid:<width>")
    p.add_argument("--checkpoints", nargs="+", required=True, help="e.g. 100 1000 or 100,1000")
    p.set_defaults(func=_cmd_smv)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, CapacityError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OnlineReduceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
