import argparse
import sys
from typing import Optional, Sequence

from loguru import logger

from app import __version__
from app.commands import COMMANDS
from app.config import settings
from app.exceptions import (
    BudgetExceededError,
    ConfigError,
    InvalidSampleError,
    InvariantViolationError,
    MannWhitneyError,
    TruncationError,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} - {name} - {level} - {message}"


def configure_logging(level: Optional[str] = None):
    """Console sink on stderr, plus a file sink when LOG_TO_FILE is set"""
    level = (level or settings.log_level).upper()
    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)

    if settings.log_to_file:
        log_dir = settings.log_dir
        log_dir.mkdir(parents=True, exist_ok=True)
        logger.add(log_dir / f"{settings.app_name}.log", level=level, format=LOG_FORMAT, mode="a")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Variance estimation for the Mann-Whitney effect, with simulation and verification tools",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help=f"override LOG_LEVEL (default {settings.log_level})")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        return args.handler(args)
    except BudgetExceededError as e:
        logger.error(str(e))
        return EXIT_BUDGET
    except (InvalidSampleError, ConfigError, TruncationError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except InvariantViolationError as e:
        logger.error(f"Invariant violated: {e}")
        return EXIT_FAILED
    except MannWhitneyError as e:
        logger.error(str(e))
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
