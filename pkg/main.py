import argparse
import logging
import os
import sys
from typing import List, Optional

import scipy.fft
from dotenv import load_dotenv

from cli.commands import COMMANDS
from cli.context import RunContext, resolve_output_dir, resolve_seed
from middleware import configure_logging, error_handler
from schemas.run_config import RunConfig, load_run_config
from services.reporting import dumps

# Load environment variables
load_dotenv()

logger = logging.getLogger("besov_dh")


def _global_options(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--config", default=default, help="INI run configuration")
    parser.add_argument("--output", default=default, help="Report directory (env BESOV_DH_OUTPUT_DIR)")
    parser.add_argument("--seed", type=int, default=default, help="Seed (env BESOV_DH_SEED)")
    parser.add_argument("--jobs", type=int, default=default, help="FFT worker threads")
    parser.add_argument("--plot", action="store_true", default=default, help="SVG charts from every CSV")


def build_parser() -> argparse.ArgumentParser:
    """
    Top-level parser with one sub-parser per command

    Global options are accepted before or after the subcommand.
    """
    parser = argparse.ArgumentParser(
        prog="besov-dh",
        description="Pseudospectral Debye-Hueckel solver and Besov-space audit toolkit",
    )
    _global_options(parser, None)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for command in COMMANDS:
        command.register(subparsers, [common])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand

    Returns:
        int: 0 on success or pass, 1 on failed experiment or numerical
            failure, 2 on usage or configuration errors
    """
    configure_logging(os.getenv("LOG_LEVEL"), os.getenv("LOG_FILE"))
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_run_config(args.config) if args.config else RunConfig()
        config = config.with_overrides(
            seed=resolve_seed(args.seed, config),
            output_dir=str(resolve_output_dir(args.output, config)),
            plot=args.plot,
        )
        ctx = RunContext(args.command, config, config.output.directory)
        logger.info(f"Running {args.command} with seed {ctx.seed}, reports in {ctx.output_dir}")
        workers = args.jobs if args.jobs is not None else scipy.fft.get_workers()
        with scipy.fft.set_workers(workers):
            return args.handler(args, ctx)
    except Exception as e:
        code, payload = error_handler.handle(e, args.command)
        print(dumps(payload), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
