import argparse
from pathlib import Path

from cli.context import RunContext
from middleware.error_handling import EXIT_OK
from schemas.besov import BesovIndex, Measure
from services.field_io import read_snapshot
from services.littlewood_paley import besov_report


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("norm", parents=parents, help="Homogeneous Besov norm of a field")
    parser.add_argument("--input", required=True, help="DHF1 snapshot")
    parser.add_argument("--s", type=float, required=True, help="Regularity")
    parser.add_argument("--p", type=float, required=True, help="Lebesgue exponent")
    parser.add_argument("--q", type=float, required=True, help="Shell summation exponent, inf allowed")
    parser.add_argument("--measure", choices=[m.value for m in Measure], default=None)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, ctx: RunContext) -> int:
    field = read_snapshot(args.input)
    measure = Measure(args.measure) if args.measure else ctx.config.solver.measure
    report = besov_report(field, BesovIndex(s=args.s, p=args.p, q=args.q), measure=measure)
    ctx.emit(
        f"norm_{Path(args.input).stem}",
        report,
        ["j", "shell_lp_norm", "weight_2js"],
        report.csv_rows(),
    )
    return EXIT_OK
