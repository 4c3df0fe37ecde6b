import argparse
import json
import logging
import sys
from typing import List, Optional

from pysupplygame import constants, exceptions
from pysupplygame.misc.events import RunEvents
from pysupplygame.misc.routers import Router
from pysupplygame.misc.updates import BaseUpdate
from pysupplygame.pysupplygame import SupplyChainLab

logger = logging.getLogger('pysupplygame')

EXIT_OK = 0
EXIT_FAILURE = 2


def log_update(event: str, update: BaseUpdate):
    """Router handler writing every run event to the log."""
    level = logging.WARNING if event == RunEvents.JOB_FAILED else logging.INFO
    logger.log(level, update.summary)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='pysupplygame', description="Repeated supplier-retailer Stackelberg game experiments.")
    parser.add_argument('--quiet', action='store_true', help="Only log warnings and errors")
    commands = parser.add_subparsers(dest='command', required=True)

    for mode in constants.Modes:
        command = commands.add_parser(mode.value, help=f"Run a {mode.value} config")
        command.add_argument('config', help="JSON experiment config")
        command.add_argument('--seed-base', type=int, default=None, help="First seed; with --seeds replaces the config's seeds")
        command.add_argument('--seeds', type=int, default=None, help="Number of consecutive seeds to run")
        command.add_argument('--out', default=None, help=f"Output directory (overrides ${constants.OUTPUT_DIR_ENV} and the config)")
        command.add_argument('--force', action='store_true', help="Write into a non-empty output directory")
        command.add_argument('--workers', type=int, default=None, help="Parallel episodes")
        command.add_argument('--quiet', action='store_true', default=argparse.SUPPRESS, help="Only log warnings and errors")

    aggregate = commands.add_parser('aggregate', help="Summarize a run directory")
    aggregate.add_argument('run_dir', help="Directory holding a manifest.json")
    aggregate.add_argument('--quiet', action='store_true', default=argparse.SUPPRESS, help="Only log warnings and errors")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Command-line entry point.

    Returns:
        int: 0 on success, 2 when the experiment cannot run (invalid config, existing output, failed jobs).
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    router = Router(RunEvents)
    router.add_handler(log_update, *RunEvents)
    try:
        if args.command == 'aggregate':
            lab = SupplyChainLab(output_dir=args.run_dir, routers=router)
            report = lab.aggregate.run()
            print(lab.aggregate.table(report))
            return EXIT_OK
        lab = SupplyChainLab.from_file(
            args.config, seed_base=args.seed_base, seeds=args.seeds, output_dir=args.out,
            workers=args.workers, force=args.force, routers=router,
        )
        if lab.config.mode != args.command:
            raise exceptions.ConfigurationError(field='mode', reason=f"config is a '{lab.config.mode}' config, not '{args.command}'")
        result = lab.run()
        if lab.config.mode == constants.Modes.SOLVE_SE:
            print(json.dumps(result, sort_keys=True, indent=2))
        else:
            print(lab.aggregate.table(result))
    except exceptions.SupplyGameError as e:
        print(f"pysupplygame: error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK
