"""Command-line entry points: ``bench`` and ``kin``.

Exit status is 0 on success, 2 on a usage error and 1 when a run fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from .bench import TrialConfig, format_csv, generate_benchmark, parse_suite_config, resolve_method, run_trial
from .engine import parse_method
from .errors import ADError, UsageError
from .kinematics import DEMO_METHODS, KIN_CSV_HEADER, harness

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 already; route it through UsageError so main() owns the exit
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _method(text: str):
    try:
        return parse_method(text)
    except UsageError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# --------------------------------------------------------------------------
# bench
# --------------------------------------------------------------------------


def bench_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bench", description="Time derivative methods on seeded sin/cos benchmark functions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="time one method on one benchmark")
    run.add_argument("--n", type=_positive, required=True, help="number of inputs")
    run.add_argument("--m", type=_positive, required=True, help="number of outputs")
    run.add_argument("--o", type=_positive, required=True, help="operations per output")
    run.add_argument("--w", type=_positive, required=True, help="number of input vectors")
    run.add_argument("--seed", type=_u64, required=True, help="benchmark program seed")
    run.add_argument("--input-seed", type=_u64, default=1, help="input sampling seed (default 1)")
    run.add_argument("--method", required=True, help="fd | forward | forward-multi:<N> | reverse")
    run.add_argument("--csv", metavar="PATH", help="write CSV here instead of stdout")

    suite = sub.add_parser("suite", help="run a grid of trials from an INI file")
    suite.add_argument("--config", required=True, help="path to the suite INI file")
    suite.add_argument("--csv", metavar="PATH", help="write CSV here instead of stdout")
    return p


def _bench(argv) -> int:
    args = bench_parser().parse_args(argv)
    if args.command == "run":
        spec = generate_benchmark(args.n, args.m, args.o, args.seed)
        cfg = TrialConfig(spec, args.w, args.input_seed, resolve_method(args.method, args.n))
        _emit(format_csv([run_trial(cfg)]), args.csv)
        return EXIT_OK
    try:
        text = Path(args.config).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config: {e}") from None
    grid = parse_suite_config(text)
    _emit(format_csv(run_trial(cfg) for cfg in grid), args.csv)
    return EXIT_OK


# --------------------------------------------------------------------------
# kin
# --------------------------------------------------------------------------


def kin_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kin", description="Root-find the 24-joint chain constraint under each derivative method.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    run = sub.add_parser("run", help="run seeded root-finding trials")
    run.add_argument("--trials", type=_positive, required=True)
    run.add_argument("--seed", type=_u64, required=True)
    run.add_argument(
        "--method", type=_method, action="append",
        help="fd | forward | forward-multi:<N> | reverse; repeat for several (default: all four)",
    )
    run.add_argument("--csv", metavar="PATH", help="write CSV here instead of stdout")
    return p


def _kin(argv) -> int:
    args = kin_parser().parse_args(argv)
    methods = tuple(args.method) if args.method else DEMO_METHODS
    rows = harness(args.trials, args.seed, methods)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(KIN_CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_row())
    _emit(buf.getvalue(), args.csv)
    return EXIT_OK


def _dispatch(fn, argv) -> int:
    try:
        return fn(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ADError, ArithmeticError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def bench_main(argv=None) -> int:
    return _dispatch(_bench, sys.argv[1:] if argv is None else argv)


def kin_main(argv=None) -> int:
    return _dispatch(_kin, sys.argv[1:] if argv is None else argv)


def main(argv=None) -> int:
    """``python -m scalarad {bench|kin} ...``"""
    argv = sys.argv[1:] if argv is None else list(argv)
    tools = {"bench": bench_main, "kin": kin_main}
    if not argv or argv[0] not in tools:
        print("usage: python -m scalarad {bench|kin} ...", file=sys.stderr)
        return EXIT_USAGE
    return tools[argv[0]](argv[1:])

