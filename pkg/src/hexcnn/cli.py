"""Command-line interface: verification, space reports, micro-benchmarks,
training benchmarks, and image resampling, all emitting CSV.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import bench
from .checks import run_adjoint_suite, run_gradient_suite, run_oracle_suite
from .fileio import read_image, write_hxt
from .resample import min_cover_side, square_to_hex

VERIFY_HEADER = ["suite", "case", "status", "max_rel_err"]


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("HEXCNN_THREADS", "1")))
    except ValueError:
        return 1


def _write_csv(path, header, rows) -> None:
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            out.close()


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_verify(args) -> int:
    rows = []
    failures = []
    if args.cases > 0:
        for suite_rows, suite_failures in (
            run_oracle_suite(args.seed, args.cases, inject_fault=args.inject_fault),
            run_adjoint_suite(args.seed + 1, args.cases),
            run_gradient_suite(args.seed + 2, probes=args.gradient_probes),
        ):
            rows.extend(suite_rows)
            failures.extend(suite_failures)
    _write_csv(args.out, VERIFY_HEADER, [[r["suite"], r["case"], r["status"], f"{r['max_rel_err']:.3e}"] for r in rows])
    if failures:
        name, payload = failures[0]
        if payload is not None:
            replay = f"hexcnn-replay-{name}.npz"
            np.savez(replay, **payload)
            print(f"verification failed: {name} (inputs saved to {replay})", file=sys.stderr)
        else:
            print(f"verification failed: {name}", file=sys.stderr)
        return 1
    return 0


def cmd_space_report(args) -> int:
    rows = bench.space_report(args.sizes, channels=args.channels, filter_side=args.filter_side, stride=args.stride)
    _write_csv(args.out, bench.SPACE_REPORT_HEADER, rows)
    return 0


def cmd_bench_conv(args) -> int:
    results = bench.bench_conv(
        args.sizes,
        filter_side=args.filter_side,
        stride=args.stride,
        channels=args.channels,
        filters=args.filters,
        reps=args.reps,
        seed=args.seed,
        threads=args.threads,
    )
    benched = {r.input_side for r in results}
    for side in args.sizes:
        if side not in benched:
            print(f"skipping side {side}: geometry invalid for filter "
                  f"{args.filter_side} stride {args.stride}", file=sys.stderr)
    _write_csv(args.out, bench.BENCH_CONV_HEADER, [r.row() for r in results])
    return 0


def cmd_bench_train(args) -> int:
    try:
        rows = bench.bench_train(
            args.preset,
            args.side,
            batch=args.batch,
            steps=args.steps,
            reps=args.reps,
            learning_rate=args.lr,
            seed=args.seed,
            threads=args.threads,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_csv(args.out, bench.BENCH_TRAIN_HEADER, rows)
    return 0


def cmd_resample(args) -> int:
    try:
        img = read_image(args.input)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.side == "auto":
        side = min_cover_side(max(img.height, img.width))
    else:
        try:
            side = int(args.side)
            if side < 1:
                raise ValueError
        except ValueError:
            print(f"error: --side must be a positive integer or 'auto', got {args.side!r}",
                  file=sys.stderr)
            return 2
    write_hxt(args.output, square_to_hex(img, side))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexcnn",
        description="Hexagonal CNN kernels: verification, space reports, and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the oracle, adjoint, and gradient suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cases", type=int, default=50, help="randomized cases per suite")
    p.add_argument("--gradient-probes", type=int, default=20)
    p.add_argument("--inject-fault", action="store_true",
                   help="test hook: corrupt one kernel result to exercise the failure path")
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("space-report", help="storage formulas for hex input vs baselines")
    p.add_argument("--sizes", type=_int_list, default=[30, 60, 90, 120],
                   help="comma-separated hexagon side lengths")
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--filter-side", type=int, default=2)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_space_report)

    p = sub.add_parser("bench-conv", help="time hex direct vs GEMM vs ZeroOut convolution")
    p.add_argument("--sizes", type=_int_list, default=[64, 128, 256])
    p.add_argument("--filter-side", type=int, default=2)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--filters", type=int, default=1)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads(),
                   help="recorded parallelism cap (kernels run sequentially)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_bench_conv)

    p = sub.add_parser("bench-train", help="time one network on both layouts")
    p.add_argument("--preset", choices=["hexlenet4", "hexlenet5"], default="hexlenet5")
    p.add_argument("--side", type=int, default=17)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_bench_train)

    p = sub.add_parser("resample", help="resample a square image onto a hexagon")
    p.add_argument("input", help="IMG1, PGM (P5), or PPM (P6) file")
    p.add_argument("output", help="output HXT1 path")
    p.add_argument("--side", default="auto",
                   help="hexagon side length, or 'auto' for the minimal covering")
    p.set_defaults(func=cmd_resample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
