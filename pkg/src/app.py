"""
app.py

Entry point for the ultrafun command-line tool.
Configures logging, resolves the run configuration and dispatches one subcommand.

This application follows a modular architecture:
- Subcommands are defined in `commands/` modules.
- Configuration and report schemas are located in `models/`.
- Telemetry, configuration layering and output writers are in `framework/`.
- The numerical core lives in `calculus/`.

Environment Variables:
    TESTING (str): If set to `"true"`, logs go to a plain stream handler instead of OpenTelemetry.
    ULTRAFUN_LOG_LEVEL (str): Root logging level (default INFO).

Exit codes:
    0 success, 1 failed run or calculus error, 2 invalid configuration or environment.

"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from pydantic import ValidationError

from calculus.errors import CalculusError
from commands import check, degenerate1d, gauss, info, poisson, refine_study
from framework.config import config_hash, load_config, load_environment, parse_tolerances
from framework.telemetry import run_logging

logger = logging.getLogger(__name__)

COMMANDS = {module.NAME: module for module in (check, degenerate1d, poisson, gauss, refine_study, info)}


def configure_logging(level: str = "INFO") -> None:
    root = logging.getLogger()
    root.setLevel(level)
    if root.handlers:
        return
    if os.getenv("TESTING") == "true":
        # Basic logging when running tests (no OTEL)
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s'))
    else:
        from opentelemetry.sdk._logs import LoggingHandler
        handler = LoggingHandler()
    root.addHandler(handler)


def parse_cells(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cells must look like N or N,N, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ultrafun", description="Finite-level ultrafunction calculus experiments")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, module in COMMANDS.items():
        sub = subparsers.add_parser(name, help=module.HELP)
        sub.add_argument("--config", help="JSON config file")
        sub.add_argument("--gamma", type=float)
        sub.add_argument("--levels", type=int)
        sub.add_argument("--cells", type=parse_cells, help="cells per axis, N or N,N")
        sub.add_argument("--degree", type=int)
        sub.add_argument("--seeds", type=int, dest="seeds_per_cell", help="seeds per cell")
        sub.add_argument("--out", help="output directory")
        sub.add_argument("--tol", action="append", metavar="NAME=VAL", help="tolerance override (repeatable)")
        sub.add_argument("--region", choices=["disk", "koch", "cells"])
        sub.add_argument("--quantity", choices=["perimeter", "pairing", "poisson_error", "smooth_error"])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand.

    Args:
        argv (list[str], optional): Arguments without the program name; sys.argv[1:] when omitted.

    Returns:
        int: The exit code.
    """
    args = build_parser().parse_args(argv)
    try:
        environment = load_environment()
        configure_logging(environment["log_level"])
        overrides = {
            "gamma": args.gamma,
            "levels": args.levels,
            "cells": args.cells,
            "degree": args.degree,
            "seeds_per_cell": args.seeds_per_cell,
            "out": args.out,
            "region": args.region,
            "quantity": args.quantity,
            "tolerances": parse_tolerances(args.tol) or None,
        }
        config = load_config(args.config, overrides, environment)
    except (EnvironmentError, ValidationError, ValueError) as e:
        logger.error(f"Invalid configuration: {str(e)}")
        return 2

    module = COMMANDS[args.command]
    with run_logging(args.command, config_hash(config)) as outcome:
        try:
            status, outputs = module.run(config)
        except CalculusError as e:
            logger.error(f"{args.command} failed: {str(e)}")
            status, outputs = 1, []
        outcome["status"] = status
        outcome["outputs"] = [os.path.basename(path) for path in outputs]
    return status


if __name__ == "__main__":
    sys.exit(main())
