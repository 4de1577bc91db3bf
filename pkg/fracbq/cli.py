import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from fracbq.configs import COMMANDS, build_experiment
from fracbq.errors import FracbqError
from fracbq.pipelines import ReturnCodes, run
from fracbq.utils import LOG_FORMAT, threads_from_env, transform_workers

logger = logging.getLogger("fracbq")

_HANDLER_NAME = "fracbq-cli"


def configure_logging(quiet: bool = False) -> None:
    root = logging.getLogger("fracbq")
    root.setLevel(logging.WARNING if quiet else logging.INFO)
    if not any(handler.get_name() == _HANDLER_NAME for handler in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.set_name(_HANDLER_NAME)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracbq",
        description="Mild solutions of the forced fractional Boussinesq system and their verification suite.",
    )
    parser.add_argument(
        "command", nargs="?", choices=COMMANDS, help="Pipeline to run; overrides the command in the config file"
    )
    parser.add_argument("--config", help="Experiment config (.json, .yaml, .yml or .toml)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--seed", type=int, help="Random seed for data and test families")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)
    overrides: Dict[str, Any] = {"command": args.command, "out": args.out, "seed": args.seed}

    try:
        runs = build_experiment(args.config, overrides)
    except (FracbqError, ValueError) as exc:
        logger.error("Invalid config: %s", exc)
        return ReturnCodes.FATAL_ERROR

    codes: List[int] = []
    with transform_workers(threads_from_env()):
        for config in runs:
            try:
                codes.append(run(config))
            except (FracbqError, ValueError) as exc:
                logger.error("%s failed: %s", config.command, exc)
                codes.append(ReturnCodes.FATAL_ERROR)
    return max(codes, default=ReturnCodes.SUCCESS)


def console_entry() -> None:
    sys.exit(main())
