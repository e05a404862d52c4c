import argparse

from cli.commands.experiment import emit_verdict
from cli.context import RunContext
from schemas.experiments import ExperimentKind
from services.experiments import run_experiment


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("sweep", parents=parents, help="Smallness-threshold sweep")
    parser.add_argument("--amplitude-low", type=float, default=None)
    parser.add_argument("--amplitude-high", type=float, default=None)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, ctx: RunContext) -> int:
    spec = ctx.config.experiment_spec(ExperimentKind.THRESHOLD_SWEEP)
    update = {}
    if args.amplitude_low is not None:
        update["amplitude_low"] = args.amplitude_low
    if args.amplitude_high is not None:
        update["amplitude_high"] = args.amplitude_high
    if update:
        spec = spec.model_validate({**spec.model_dump(), **update})
    return emit_verdict(ctx, run_experiment(spec, store=ctx.store))
