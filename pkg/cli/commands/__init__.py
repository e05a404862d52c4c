# Subcommands; each module exposes register(subparsers, parents)

from . import audit, decompose, evolve, experiment, norm, picard, sweep

COMMANDS = [decompose, norm, evolve, picard, audit, experiment, sweep]

__all__ = ["COMMANDS"]
