import argparse
from typing import Optional

from cli.context import RunContext
from middleware.error_handling import EXIT_OK
from services.dh_solver import fixed_point_solve


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("picard", parents=parents, help="Fixed-point solve of the mild formulation")
    parser.add_argument("--c0", type=float, default=None, help="Empirical bilinear constant")
    parser.add_argument("--no-residual", action="store_true", help="Skip the mild residual")
    parser.set_defaults(handler=run)


def _constant_c0(args: argparse.Namespace, ctx: RunContext) -> Optional[float]:
    if args.c0 is not None:
        return args.c0
    constants = ctx.config.experiment.get("constants", {})
    return float(constants["C0"]) if "C0" in constants else None


def run(args: argparse.Namespace, ctx: RunContext) -> int:
    """
    Picard iteration on the configured data; divergence exits through the
    error handler with the partial ConvergenceReport attached.
    """
    _, report = fixed_point_solve(
        ctx.load_data(),
        ctx.config.solver,
        constant_c0=_constant_c0(args, ctx),
        compute_residual=not args.no_residual,
    )
    rows = [
        [record.index, record.monitor_norm, record.increment, record.contraction_ratio]
        for record in report.history
    ]
    ctx.emit(
        "picard",
        report,
        ["iterate", "monitor_norm", "increment", "contraction_ratio"],
        rows,
        chart_columns=["increment"],
        log_y=True,
        iterate_wall_times=report.timings(),
    )
    return EXIT_OK
