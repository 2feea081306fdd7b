"""Command-line front end.

    vrrw simulate --config cfg.txt [--seed N] [--out file.csv]
                  [--workers N] [--record]
    vrrw phase    --config cfg.txt ...     # recurrence / localization study
    vrrw verify   --config cfg.txt ...     # path-wise martingale checks
    vrrw lemma    --config cfg.txt ...     # constrained-infimum scan over K

`--seed`, `--out`, and `--workers` override the config file; `--record`
makes `simulate` write binary trajectory records into the configured
record_dir.  Exit codes: 0 = success (verify: all checks passed),
1 = at least one check violated, 2 = configuration or I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, ExperimentConfig
from .experiments import (run_lemma_scan, run_localization_experiment,
                          run_recurrence_experiment, run_simulate_batch,
                          run_verify_sweep)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vrrw",
        description="Reinforced-walk simulation, verification, and scans")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("simulate", "run trajectories and write per-trajectory summaries"),
            ("phase", "run the configured recurrence or localization experiment"),
            ("verify", "run path-wise martingale checks; nonzero exit on violation"),
            ("lemma", "scan the estimated constrained infimum over sizes")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="key = value config file")
        p.add_argument("--seed", type=int, default=None, help="override master seed")
        p.add_argument("--out", default=None, help="override output CSV path")
        p.add_argument("--workers", type=int, default=None,
                       help="override worker process count")
        p.add_argument("--record", action="store_true",
                       help="emit binary trajectory records (simulate only)")
    return parser


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"--seed must be nonnegative, got {args.seed}")
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {args.workers}")
        cfg.workers = args.workers
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "simulate":
            stats = run_simulate_batch(cfg, record=args.record)
            print(f"simulated {len(stats.rows)} trajectories "
                  f"(weight {cfg.weight}, horizon {cfg.horizon})")
            return EXIT_OK
        if args.command == "phase":
            if cfg.kind == "recurrence":
                rec = run_recurrence_experiment(cfg)
                print(f"recurrence: fraction with >= {cfg.min_returns} returns "
                      f"= {rec.fraction_min_returns!r}, median range exponent "
                      f"= {rec.median_range_exponent!r}")
                return EXIT_OK
            if cfg.kind == "localization":
                loc = run_localization_experiment(cfg)
                print(f"localization: modal final-half visited-set size "
                      f"= {loc.modal_size}")
                return EXIT_OK
            print(f"config error: phase needs kind = recurrence or "
                  f"localization, got {cfg.kind!r}", file=sys.stderr)
            return EXIT_CONFIG
        if args.command == "verify":
            report = run_verify_sweep(cfg)
            fails = report.failures()
            print(f"verify: {len(report.rows)} checks, {len(fails)} violations "
                  f"(stopped-bound applicable on {report.stopped_checked} paths)")
            for row in fails[:20]:
                print(f"  VIOLATION seed={row[0]} stream={row[1]} n={row[2]} "
                      f"check={row[3]} value={row[4]!r}", file=sys.stderr)
            return EXIT_OK if report.all_passed else EXIT_VIOLATION
        if args.command == "lemma":
            stats = run_lemma_scan(cfg)
            for p in stats.points:
                print(f"k={p.k} value={p.value!r} converged={int(p.converged)} "
                      f"max_b={p.max_b!r} argmax={p.argmax_index}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
