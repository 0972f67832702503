"""`simulate`: run a Monte-Carlo experiment config and write its CSV"""
import argparse
import sys
from pathlib import Path

from loguru import logger

from app.exceptions import InvalidSampleError
from app.simulation import ExperimentCatalog, load_experiment_config, run_experiment


def register(subparsers):
    parser = subparsers.add_parser("simulate", help="Run a bias, q-MSE or consistency experiment")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="experiment config JSON file")
    source.add_argument("--name", help="experiment name in EXPERIMENTS_DIR (file stem)")
    parser.add_argument("--out", type=Path, help="CSV output file (default: stdout)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--nsim", type=int, help="override the replication count")
    parser.add_argument("--threads", type=int, default=None, help="worker processes (default: available parallelism)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config) if args.config else ExperimentCatalog().get(args.name)

    overrides = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise InvalidSampleError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        overrides["seed"] = args.seed
    if args.nsim is not None:
        if args.nsim < 1:
            raise InvalidSampleError(f"--nsim must be positive, got {args.nsim}")
        overrides["nsim"] = args.nsim
    if overrides:
        config = config.model_copy(update=overrides)
    if args.threads is not None and args.threads < 0:
        raise InvalidSampleError(f"--threads must be non-negative, got {args.threads}")

    frame = run_experiment(config, threads=args.threads)
    if args.out is None:
        frame.to_csv(sys.stdout, index=False)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.out, index=False)
        logger.info(f"Wrote {len(frame)} rows to {args.out}")
    return 0
