"""
Command-line entrypoint: deutsch | disaster | sweep | verify.

Exit codes: 0 when every enabled check passes, 1 when a check fails,
2 for usage, configuration and file errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from branchsim.exceptions import (
    BranchSimError,
    CapacityError,
    ConfigurationError,
    FileOperationError,
    PartitionError,
    ProbabilityRangeError,
)
from utils.env_config import load_environment, resolve_log_level

from .config import Experiment, load_config
from .experiments import render_summary, run_experiment


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

_USAGE_ERRORS = (
    CapacityError,
    ConfigurationError,
    FileOperationError,
    PartitionError,
    ProbabilityRangeError,
)


def _hex_or_int(raw: str) -> int:
    return int(raw, 0)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value experiment file")
    common.add_argument("--seed", type=_hex_or_int, help="64-bit master seed")
    common.add_argument("--trials", type=int)
    common.add_argument("--interpretation", choices=["mwi", "collapse", "both"])
    common.add_argument("--out", help="CSV output path; the summary goes to <out>.summary.csv")
    common.add_argument("--workers", type=int, help="threads used to run trials")
    common.add_argument("--confidence", type=float, help="Wilson interval confidence")
    common.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")

    cycle = argparse.ArgumentParser(add_help=False)
    cycle.add_argument("--p", type=float, help="probability of learning about a disaster")
    cycle.add_argument("--q", type=float, help="pseudo-random reset fraction")
    cycle.add_argument("--scenario", choices=["uncorrelated", "correlated"])
    cycle.add_argument("--macrostate-count", dest="macrostate_count", type=int)

    parser = argparse.ArgumentParser(
        prog="branchsim",
        description="Observer branching, memory erasure and reversible measurement experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    deutsch = sub.add_parser("deutsch", parents=[common], help="reversible measurement test")
    deutsch.add_argument("--mode", choices=["reversible", "dump"])
    deutsch.add_argument("--basis", choices=["x", "z"], help="final measurement basis")

    disaster = sub.add_parser("disaster", parents=[common, cycle], help="backup/reset cycle")
    disaster.add_argument("--backup-index", dest="backup_index", type=int)

    grid = sub.add_parser("sweep", parents=[common, cycle], help="grid over p and q")
    grid.add_argument("--p-list", dest="p_list", help="comma-separated p values")
    grid.add_argument("--q-list", dest="q_list", help="comma-separated q values")

    sub.add_parser("verify", parents=[common], help="run every self-check")
    return parser


def configure_logging(cli_value: str | None) -> None:
    logging.basicConfig(
        level=resolve_log_level(cli_value=cli_value),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    load_environment()
    configure_logging(args.log_level)

    flags = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "config", "log_level")
    }
    try:
        cfg = load_config(Experiment(args.command), flags=flags, config_path=args.config)
        result = run_experiment(cfg)
    except _USAGE_ERRORS as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BranchSimError as exc:
        logger.error("Experiment failed: %s", exc.message)
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED

    print(render_summary(result))
    if cfg.out is not None and cfg.experiment is not Experiment.VERIFY:
        print(f"CSV: {cfg.out}")
    if cfg.summary_path is not None:
        print(f"Summary: {cfg.summary_path}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
