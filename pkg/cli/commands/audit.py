import argparse
import logging

from cli.context import RunContext
from middleware.error_handling import EXIT_FAILURE, EXIT_OK
from services.audits import heat_smoothing_audit, product_estimate_audit
from services.constant_store import fingerprint
from services.dh_solver import estimate_c0_report
from services.littlewood_paley import bernstein_audit

logger = logging.getLogger("besov_dh")

AUDIT_KINDS = ["bernstein", "heat", "product", "c0"]


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("audit", parents=parents, help="Empirical inequality constants")
    parser.add_argument("--kind", choices=AUDIT_KINDS, required=True)
    parser.add_argument("--trials", type=int, default=20)
    parser.add_argument("--s", type=float, default=1.0, help="Derivative order (bernstein)")
    parser.add_argument("--p", type=float, default=2.0, help="Lebesgue exponent (bernstein)")
    parser.add_argument("--q", type=float, default=2.0, help="Target exponent (bernstein)")
    parser.add_argument("--horizon", type=float, default=None,
                        help="Chemin-Lerner product audit on [0, horizon] (product)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, ctx: RunContext) -> int:
    grid, cfg, seed = ctx.config.grid, ctx.config.solver, ctx.seed
    if args.kind == "bernstein":
        report = bernstein_audit(None, grid, args.s, args.p, args.q, args.trials, seed)
    elif args.kind == "heat":
        report = heat_smoothing_audit(grid, p=cfg.monitor_p, q=cfg.monitor_q, trials=args.trials, seed=seed,
                                      r1=cfg.r1, measure=cfg.measure)
    elif args.kind == "product":
        report = product_estimate_audit(grid, cfg, trials=args.trials, seed=seed, horizon=args.horizon)
    else:
        report = estimate_c0_report(cfg, grid, args.trials, seed)

    store = ctx.store
    if store is not None:
        for name, value in report.constants.items():
            store.save_constant(name, grid, fingerprint(cfg.model_dump(mode="json")), seed, args.trials, value, {"audit": args.kind})

    rows = [
        [i, row.j, row.r, row.horizon, row.max_ratio, row.min_ratio, row.samples]
        for i, row in enumerate(report.rows)
    ]
    ctx.emit(f"audit_{args.kind}", report, ["row", "j", "r", "horizon", "max_ratio", "min_ratio", "samples"], rows,
             chart_columns=["max_ratio", "min_ratio"])
    if not report.stable:
        logger.warning(f"Audit {args.kind} unstable: max ratio {report.max_ratio:.4g}")
        return EXIT_FAILURE
    return EXIT_OK
