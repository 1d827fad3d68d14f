"""Command-line entry point for the resilience experiments"""

import argparse
import logging
import sys
from typing import List, Optional

from app.core.config import Settings, load_experiment_config
from app.core.errors import ConfigError, ResilienceError, SolverError, TrainerInfeasibleError
from app.core.experiments import cmd_bound_curve, cmd_evaluate, cmd_region_map, cmd_train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_INFEASIBLE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resilient-linear",
        description="Train linear classifiers and measure their resilience to bounded feature attacks")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in [
        ("train", "train one classifier and write its model JSON"),
        ("evaluate", "write the resilience table of trainers against attacks"),
        ("bound-curve", "compare the theoretical bound with empirical resilience"),
        ("region-map", "write perfectly-attackable region grids"),
    ]:
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--config", required=True, help="experiment JSON file")
        sub.add_argument("--out", default=None, help="output directory (overrides the config)")
        sub.add_argument("--seed", type=int, default=None, help="base seed (overrides the config)")
        sub.add_argument("--jobs", type=int, default=None, help="parallel workers (overrides the config)")
        sub.add_argument("--verbose", action="store_true", help="log at DEBUG level")
        if name == "train":
            sub.add_argument("--trainer", choices=["hinge", "zero_one", "majority"], default=None,
                             help="trainer to run (default: first in the config)")
    return parser


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, Settings().log_level, logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s')


def run(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config, seed=args.seed, jobs=args.jobs)
    if args.command == "train":
        report = cmd_train(config, args.out, args.trainer)
        logger.info(f"Trained {report.trainer}: risks ({report.train_risk.risk_pos:.4f}, "
                    f"{report.train_risk.risk_neg:.4f})")
    elif args.command == "evaluate":
        cmd_evaluate(config, args.out)
    elif args.command == "bound-curve":
        cmd_bound_curve(config, args.out)
    elif args.command == "region-map":
        cmd_region_map(config, args.out)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except TrainerInfeasibleError as e:
        logger.error(str(e))
        return EXIT_INFEASIBLE
    except SolverError as e:
        logger.error(f"Solver failure: {e}")
        return EXIT_SOLVER
    except (ResilienceError, ValueError) as e:
        logger.error(f"Input error: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
