import argparse
import logging
import time
from pathlib import Path

from cli.context import RunContext
from middleware.error_handling import EXIT_OK
from services.field_io import read_snapshot, write_snapshot
from services.littlewood_paley import dyadic_blocks, lp_norm

logger = logging.getLogger("besov_dh")


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("decompose", parents=parents, help="Littlewood-Paley blocks of a field")
    parser.add_argument("--input", required=True, help="DHF1 snapshot")
    parser.add_argument("--p", type=float, default=2.0, help="Lebesgue exponent of the block norms")
    parser.add_argument("--blocks", action="store_true", help="Write every block as a DHF1 snapshot")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, ctx: RunContext) -> int:
    """
    Decompose a snapshot into dyadic blocks
    """
    start_time = time.time()
    field = read_snapshot(args.input)
    measure = ctx.config.solver.measure
    blocks = dyadic_blocks(field)
    logger.info(f"Decomposing {args.input} into {len(blocks)} blocks")

    rows = []
    block_files = {}
    for j, block in blocks.items():
        rows.append([j, lp_norm(block, args.p, measure)])
        if args.blocks:
            target = ctx.output_dir / f"{Path(args.input).stem}_block_{j:+d}.dhf1"
            block_files[str(j)] = str(write_snapshot(target, block))

    payload = {
        "input": str(args.input),
        "grid": field.grid.model_dump(),
        "p": args.p,
        "measure": measure.value,
        "mean": field.mean,
        "shell_range": list(field.grid.shell_range),
        "blocks": {str(j): norm for j, norm in rows},
        "block_files": block_files,
    }
    ctx.emit(f"decompose_{Path(args.input).stem}", payload, ["j", "lp_norm"], rows, log_y=True)
    logger.info(f"Decomposition finished in {time.time() - start_time:.3f}s")
    return EXIT_OK
