"""Command-line benchmark runner.

    active-ris-bench run --config cfg.json --out results.csv \
        [--format csv|json] [--trials N] [--seed S] [--per-antenna]

Flags override the corresponding config fields.  Exit codes: 0 success,
1 configuration error, 2 runtime failure.
"""

import argparse
import sys
from dataclasses import replace

from .harness import ConfigError, emit, load_config, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="active-ris-bench",
        description="Benchmark the active-RIS joint design solver.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the configured experiment sweep")
    run.add_argument("--config", required=True, help="JSON config path")
    run.add_argument("--out", required=True, help="output file path")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--trials", type=int, default=None,
                     help="override the number of trials")
    run.add_argument("--seed", type=int, default=None,
                     help="override the base seed")
    run.add_argument("--per-antenna", action="store_true",
                     help="use the per-antenna BS power constraint")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.trials is not None:
            cfg = replace(cfg, trials=args.trials)
        if args.seed is not None:
            cfg = replace(cfg, base_seed=args.seed)
        if args.per_antenna:
            cfg = replace(cfg, per_antenna=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        rows, summary = run_experiment(cfg)
        emit(rows, args.format, args.out, config=cfg, summary=summary)
    except Exception as exc:  # noqa: BLE001 - report and signal failure
        print(f"run failed: {exc}", file=sys.stderr)
        return 2

    for point in summary:
        print(f"M={point['M']} N={point['N']} K={point['K']} "
              f"P={point['p_max_dbm']:g} dBm: "
              f"sum rate {point['sum_rate_mean']:.3f} "
              f"+/- {point['sum_rate_std']:.3f} bits/s/Hz, "
              f"runtime {point['runtime_ms_mean']:.1f} ms "
              f"({point['trials']} trials)")
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
