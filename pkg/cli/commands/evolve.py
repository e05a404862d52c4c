import argparse
import logging

from cli.context import RunContext
from middleware.error_handling import EXIT_OK
from services.chemin_lerner import continuity_jump
from services.dh_solver import evolve, pair_besov_norm
from services.field_io import export_trajectory

logger = logging.getLogger("besov_dh")


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("evolve", parents=parents, help="ETD-RK2 time stepping of the configured data")
    parser.add_argument("--export", action="store_true", help="Write every step as DHF1 snapshots")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, ctx: RunContext) -> int:
    """
    Evolve the configured initial data and report per-step diagnostics

    Blow-up propagates as BlowUpError and is reported by the error handler.
    """
    cfg = ctx.config.solver
    data = ctx.load_data()
    traj = evolve(data, cfg)

    rows = []
    for t, state in zip(traj.times, traj.states):
        rows.append([
            float(t),
            state.max_amplitude,
            state.net_charge,
            state.v.mean,
            state.w.mean,
            pair_besov_norm(state, cfg),
        ])
    payload = {
        "solver": cfg,
        "grid": data.grid,
        "steps": len(traj) - 1,
        "horizon": traj.horizon,
        "final_max_amplitude": rows[-1][1],
        "max_charge_drift": max(abs(row[2] - rows[0][2]) for row in rows),
        "max_mean_drift": max(max(abs(row[3] - rows[0][3]), abs(row[4] - rows[0][4])) for row in rows),
        "final_critical_norm": rows[-1][5],
        "continuity_jump": continuity_jump(traj, cfg.critical_index, measure=cfg.measure),
    }
    if args.export:
        index = export_trajectory(traj, ctx.output_dir / "trajectory", cfg.monitor_p, measure=cfg.measure)
        payload["trajectory_index"] = str(index)
        logger.info(f"Trajectory exported to {index.parent}")
    ctx.emit(
        "evolve",
        payload,
        ["time", "max_amplitude", "net_charge", "mean_v", "mean_w", "critical_norm"],
        rows,
        chart_columns=["max_amplitude", "critical_norm"],
    )
    return EXIT_OK
