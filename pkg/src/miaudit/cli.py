"""Command-line entry point.

Subcommands: simulate, score, calibrate, attack, evaluate, pipeline.
Flags override config fields. Exit codes: 0 success, 2 config error,
3 data validation error, 4 numerical failure. MIA_LOG sets log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .errors import ConfigError, DataError, NumericalError
from .pipeline import (
    RunConfig,
    cmd_attack,
    cmd_calibrate,
    cmd_evaluate,
    cmd_pipeline,
    cmd_score,
    cmd_simulate,
    load_config,
    summary_table,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="miaudit",
        description="Black-box membership-inference audit toolkit for conditional image generators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "synthesize shadow/target embedding files"),
        ("score", "compute similarity profiles from embedding files"),
        ("calibrate", "fit the selected attacks on shadow profiles"),
        ("attack", "score the target split with fitted attacks"),
        ("evaluate", "compute ASR/AUC/TPR reports from attack scores"),
        ("pipeline", "run score, calibrate, attack and evaluate in one shot"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the run config JSON")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--metric",
            choices=["cosine", "l1", "l2", "hamming"],
            default=None,
            help="override the similarity metric",
        )
        p.add_argument(
            "--aggregator",
            choices=["mean", "median"],
            default=None,
            help="override the per-record aggregator",
        )
        p.add_argument(
            "--attacks",
            default=None,
            help="comma-separated subset of "
            "threshold,distribution,classifier,monte_carlo,gan_leaks,min_distance",
        )
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--scenario", default=None, help="override the scenario tag")
        p.add_argument(
            "--allow-unbalanced",
            action="store_true",
            default=None,
            help="evaluate despite unequal member/non-member counts",
        )
        p.add_argument(
            "--best-threshold-asr",
            action="store_true",
            default=None,
            help="also report the optimistic best-threshold ASR",
        )
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("MIA_LOG", "WARNING").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logger = logging.getLogger("miaudit")
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "seed": args.seed,
        "metric": args.metric,
        "aggregator": args.aggregator,
        "attacks": args.attacks,
        "out_dir": args.out,
        "scenario": args.scenario,
        "allow_unbalanced": args.allow_unbalanced,
        "best_threshold_asr": args.best_threshold_asr,
    }


def run(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg: RunConfig = load_config(args.config, _overrides(args))
        if args.command == "simulate":
            manifest = cmd_simulate(cfg)
            print(f"wrote {len(manifest['files'])} embedding files to {cfg.data_dir}")
        elif args.command == "score":
            shadow_path, target_path = cmd_score(cfg)
            print(f"wrote {shadow_path} and {target_path}")
        elif args.command == "calibrate":
            paths = cmd_calibrate(cfg)
            print(f"calibrated {len(paths)} attack(s) into {cfg.out_dir}")
        elif args.command == "attack":
            paths = cmd_attack(cfg)
            print(f"scored target with {len(paths)} attack(s)")
        elif args.command == "evaluate":
            reports = cmd_evaluate(cfg)
            print(summary_table(reports))
        else:
            reports = cmd_pipeline(cfg)
            print(summary_table(reports))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
