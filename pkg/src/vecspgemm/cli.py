"""Command line front end: run, sweep and compare subcommands.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .bench import (
    ALGOS,
    COMPARE_METRICS,
    DEFAULT_ROSTER,
    RunConfig,
    RunReport,
    compare,
    compare_csv,
    render_csv,
    run_once,
    sweep,
    sweep_csv,
)
from .errors import FormatError, InputError

USAGE_EXIT = 1
IO_EXIT = 2
VERIFY_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _default_seed() -> int:
    return int(os.environ.get("SPGEMM_SEED", "1"))


def _add_common(p: argparse.ArgumentParser):
    src = p.add_argument_group("matrix source")
    src.add_argument("--matrix", metavar="PATH", help="Matrix Market file")
    src.add_argument("--synthetic", metavar="N,Z[,SEED]",
                     help="n x n matrix with Z non-zeros per column "
                          "(seed defaults to $SPGEMM_SEED or 1)")
    p.add_argument("--algo", choices=ALGOS, default="spa")
    p.add_argument("--bmin", type=int, default=40)
    p.add_argument("--bmax", type=int, default=40)
    p.add_argument("-t", "--threshold", type=float, default=40.0,
                   help="hybrid switch point on per-column multiplications "
                        "('inf' blocks everything, 0 nothing)")
    p.add_argument("--max-vl", type=int, default=256)
    p.add_argument("--lanes", type=int, default=8)
    p.add_argument("--hash-c", type=int, default=None,
                   help="multiplier of the hash function (default a fixed odd constant)")
    p.add_argument("--esc-threshold", type=int, default=10000)
    p.add_argument("--radix-r", choices=("auto", "5", "6"), default="auto")
    p.add_argument("--verify", action="store_true",
                   help="check the product against the reference")
    p.add_argument("--dump-plan", action="store_true",
                   help="include the preprocessing plan in the JSON report")
    p.add_argument("--output", metavar="PATH", help="write here instead of stdout")


def _build_parser() -> _Parser:
    parser = _Parser(prog="spgemm-bench",
                     description="Cost-model benchmarks for sparse matrix products")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one algorithm on one matrix")
    _add_common(p_run)
    p_run.add_argument("--format", choices=("json", "csv"), default="json")

    p_sweep = sub.add_parser("sweep", help="repeat a run along one parameter axis")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", choices=("Z", "bmax", "t", "bmin"), required=True)
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated axis values")
    p_sweep.add_argument("--format", choices=("json", "csv"), default="csv")

    p_cmp = sub.add_parser("compare",
                           help="cost ratios of algorithm rosters against spa")
    _add_common(p_cmp)
    p_cmp.add_argument("--matrices", metavar="FILE", required=True,
                       help="file with one matrix path or synthetic:N,Z,SEED per line")
    p_cmp.add_argument("--algos", default=",".join(DEFAULT_ROSTER),
                       help="comma-separated roster entries like hash-32/256")
    p_cmp.add_argument("--metric", choices=COMPARE_METRICS, default="loop_iterations")
    p_cmp.add_argument("--format", choices=("json", "csv"), default="csv")
    return parser


def _config_from_args(args) -> RunConfig:
    synthetic = None
    if args.synthetic:
        parts = args.synthetic.split(",")
        if len(parts) == 2:
            parts.append(str(_default_seed()))
        if len(parts) != 3:
            raise InputError("--synthetic wants N,Z or N,Z,SEED")
        try:
            synthetic = tuple(int(p) for p in parts)
        except ValueError:
            raise InputError(f"bad --synthetic value {args.synthetic!r}") from None
    cfg = RunConfig(
        algo=args.algo,
        matrix_path=args.matrix,
        synthetic=synthetic,
        t=args.threshold,
        b_min=args.bmin,
        b_max=args.bmax,
        max_vl=args.max_vl,
        lanes=args.lanes,
        esc_threshold=args.esc_threshold,
        radix_r=None if args.radix_r == "auto" else int(args.radix_r),
        verify=args.verify,
        dump_plan=args.dump_plan,
        output=args.output,
        format=getattr(args, "format", "json"),
    )
    if args.hash_c is not None:
        cfg.hash_c = args.hash_c
    cfg.validate(require_source=args.command != "compare")
    if cfg.dump_plan and cfg.format != "json":
        raise InputError("--dump-plan needs --format json")
    return cfg


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(cfg: RunConfig) -> int:
    report = run_once(cfg)
    if cfg.format == "json":
        text = report.to_json() + "\n"
    else:
        text = render_csv([RunReport.csv_header(), report.to_csv_row()])
    _emit(text, cfg.output)
    return VERIFY_EXIT if report.verification == "fail" else 0


def _cmd_sweep(cfg: RunConfig, axis: str, raw_values: str) -> int:
    values = [float(v) if axis == "t" else int(v) for v in raw_values.split(",")]
    reports = sweep(cfg, axis, values)
    if cfg.format == "json":
        text = json.dumps([r.to_json_dict() for r in reports], sort_keys=True) + "\n"
    else:
        text = sweep_csv(axis, values, reports)
    _emit(text, cfg.output)
    return VERIFY_EXIT if any(r.verification == "fail" for r in reports) else 0


def _cmd_compare(cfg: RunConfig, matrices_file: str, algos: str, metric: str) -> int:
    with open(matrices_file, "r", encoding="utf-8") as fh:
        tokens = [line.strip() for line in fh
                  if line.strip() and not line.lstrip().startswith("#")]
    table = compare(tokens, [a for a in algos.split(",") if a], cfg, metric)
    for err in table["errors"]:
        print(f"compare: {err['matrix']}: {err['error']}", file=sys.stderr)
    if cfg.format == "json":
        text = json.dumps(table, sort_keys=True) + "\n"
    else:
        text = compare_csv(table)
    _emit(text, cfg.output)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except InputError as exc:
        print(f"spgemm-bench: error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    try:
        if args.command == "run":
            return _cmd_run(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg, args.axis, args.values)
        return _cmd_compare(cfg, args.matrices, args.algos, args.metric)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"spgemm-bench: error: {exc}", file=sys.stderr)
        return IO_EXIT
    except (FormatError, InputError, ValueError) as exc:
        print(f"spgemm-bench: error: {exc}", file=sys.stderr)
        return IO_EXIT


if __name__ == "__main__":
    sys.exit(main())
