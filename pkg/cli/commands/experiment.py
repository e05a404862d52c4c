import argparse
import logging

from cli.context import RunContext, series_table
from middleware.error_handling import EXIT_FAILURE, EXIT_OK
from schemas.experiments import ExperimentKind, ExperimentVerdict
from services.experiments import run_experiment

logger = logging.getLogger("besov_dh")


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("experiment", parents=parents, help="Run one experiment and emit its verdict")
    parser.add_argument("--kind", choices=[k.value for k in ExperimentKind], default=None,
                        help="Overrides [experiment] kind")
    parser.set_defaults(handler=run)


def emit_verdict(ctx: RunContext, verdict: ExperimentVerdict, log_y: bool = False) -> int:
    """Write the verdict JSON plus its series CSV; exit status follows the pass flag."""
    kind = verdict.spec["kind"]
    header, rows = series_table(verdict.series) if verdict.series else (None, None)
    ctx.emit(f"experiment_{kind}", verdict, header, rows, chart_columns=header[1:] if header else None, log_y=log_y)
    if verdict.passed:
        logger.info(f"Experiment {kind} passed")
        return EXIT_OK
    logger.warning(f"Experiment {kind} failed: {'; '.join(verdict.notes) or 'criterion not met'}")
    return EXIT_FAILURE


def run(args: argparse.Namespace, ctx: RunContext) -> int:
    spec = ctx.config.experiment_spec(args.kind)
    return emit_verdict(ctx, run_experiment(spec, store=ctx.store), log_y=True)
