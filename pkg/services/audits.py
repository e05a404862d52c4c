"""
Empirical audits of the heat-smoothing and product estimates.

Each audit measures a ratio over seeded random draws and records the
maximum as an empirical constant.
"""

import logging
import math
import time
from typing import Optional, Sequence

import numpy as np

from middleware.logging import operation_logger
from schemas.besov import BesovIndex, FieldSelector, Measure
from schemas.grid import Grid
from schemas.reports import AuditReport, AuditRow
from schemas.solver import SolverConfig
from services.chemin_lerner import Trajectory, chemin_lerner_norm
from services.dh_solver import StatePair
from services.littlewood_paley import (
    DyadicPartition,
    besov_norm,
    frequency_split,
    shell_symbol,
)
from services.spectral_core import (
    SpectralField,
    heat_propagator,
    product,
    random_band_limited,
)

logger = logging.getLogger("besov_dh")


def content_shells(grid: Grid) -> np.ndarray:
    """Shells whose annulus meets a non-zero lattice wavenumber."""
    corner = grid.nyquist * math.sqrt(grid.n)
    return np.array([j for j in grid.shells if 0.75 * 2.0**j < corner and 8.0 / 3.0 * 2.0**j > grid.fundamental])


def log_time_samples(horizon: float, samples: int, smallest: float = 1e-6) -> np.ndarray:
    """0 followed by geometrically spaced times up to horizon."""
    return np.concatenate([[0.0], np.geomspace(horizon * smallest, horizon, samples - 1)])


def _scalar_heat_trajectory(f: SpectralField, times: np.ndarray) -> Trajectory:
    zero = SpectralField.zeros(f.grid)
    return Trajectory(times=times, states=[StatePair(v=heat_propagator(f, float(t)), w=zero) for t in times])


def _shell_localized(grid: Grid, j: int, rng: np.random.Generator, part: Optional[DyadicPartition]) -> SpectralField:
    reach = int(min(grid.points_per_dim // 2 - 1, math.ceil(8.0 / 3.0 * 2.0**j / grid.fundamental)))
    field = random_band_limited(grid, rng, reach)
    return field.with_coeffs(shell_symbol(grid, j, part) * field.coeffs)


def heat_smoothing_audit(
    grid: Grid,
    p: float = 2.0,
    q: float = 2.0,
    r_values: Sequence[float] = (2.0, 4.0, math.inf),
    horizons: Sequence[float] = (0.1, 1.0, 10.0),
    trials: int = 50,
    seed: int = 0,
    r1: float = 3.0,
    time_samples: int = 120,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
    tolerance: float = 0.3,
) -> AuditReport:
    """
    Heat smoothing ||e^{t Delta} d||_{CL^r(0,T; B^{s+2/r})} <= C1 ||d||_{B^s}

    Data are random fields localized to one of the upper half of the
    shells carrying lattice content, with s = -2 + n/p. Stability is
    judged per r across horizons. C2 bounds the low-frequency part,
    ||e^{t Delta} S_N d||_{CL^{r1}(0,T; B^s)} <= C2 2^{2N/r1} T^{1/r1} ||d||_{B^s}.

    Args:
        grid: Grid
        p: Integrability
        q: Summability
        r_values: Time exponents
        horizons: Horizons T
        trials: Random draws per horizon
        seed: Random seed
        r1: Time exponent of the low-frequency constant
        time_samples: Samples of the geometric time grid
        part: Partition
        measure: Spatial measure
        tolerance: Allowed relative spread across horizons

    Returns:
        AuditReport: rows per (r, T) with constants C1 and C2
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    start_time = time.time()
    rng = np.random.default_rng(seed)
    idx = BesovIndex(s=-2.0 + grid.n / p, p=p, q=q)
    shells = content_shells(grid)
    upper = shells[len(shells) // 2:]

    draws = [_shell_localized(grid, int(rng.choice(upper)), rng, part) for _ in range(trials)]
    data_norms = [besov_norm(d, idx, part, measure) for d in draws]

    ratios = {(r, T): [] for r in r_values for T in horizons}
    for T in horizons:
        times = log_time_samples(T, time_samples)
        for d, d_norm in zip(draws, data_norms):
            if d_norm == 0:
                continue
            traj = _scalar_heat_trajectory(d, times)
            for r in r_values:
                target = idx.shifted(0.0 if math.isinf(r) else 2.0 / r)
                ratios[(r, T)].append(chemin_lerner_norm(traj, FieldSelector.V, r, target, part, measure) / d_norm)

    rows = [
        AuditRow(r=r, horizon=T, max_ratio=max(vals), min_ratio=min(vals), samples=len(vals))
        for (r, T), vals in ratios.items() if vals
    ]
    stable = True
    notes = []
    for r in r_values:
        maxima = [row.max_ratio for row in rows if row.r == r]
        spread = (max(maxima) - min(maxima)) / max(maxima) if maxima and max(maxima) > 0 else 0.0
        if spread > tolerance:
            stable = False
            notes.append(f"r={r:g}: spread {spread:.3f} across horizons exceeds {tolerance:g}")
    c1 = max(row.max_ratio for row in rows) if rows else 0.0

    c2 = _low_frequency_constant(grid, idx, horizons, max(1, trials // 5), rng, r1, time_samples, part, measure)
    report = AuditReport(
        kind="heat",
        seed=seed,
        trials=trials,
        rows=rows,
        max_ratio=c1,
        stable=stable,
        tolerance=tolerance,
        parameters={
            "n": grid.n, "points_per_dim": grid.points_per_dim, "box_length": grid.box_length,
            "p": p, "q": q, "r_values": list(r_values), "horizons": list(horizons), "r1": r1,
            "time_samples": time_samples, "measure": Measure(measure).value,
        },
        constants={"C1": c1, "C2": c2},
        notes=notes,
    )
    operation_logger.log_audit_operation(
        "heat_smoothing", kind="heat", duration=time.time() - start_time, c1=c1, c2=c2, stable=stable,
    )
    return report


def _low_frequency_constant(
    grid: Grid,
    idx: BesovIndex,
    horizons: Sequence[float],
    draws: int,
    rng: np.random.Generator,
    r1: float,
    time_samples: int,
    part: Optional[DyadicPartition],
    measure: Measure,
) -> float:
    worst = 0.0
    reach = max(1, grid.points_per_dim // 2 - 1)
    shells = content_shells(grid)
    for _ in range(draws):
        d = random_band_limited(grid, rng, reach)
        d_norm = besov_norm(d, idx, part, measure)
        if d_norm == 0:
            continue
        for T in horizons:
            times = log_time_samples(T, time_samples)
            for N in shells:
                _, low = frequency_split(d, int(N))
                numerator = chemin_lerner_norm(_scalar_heat_trajectory(low, times), FieldSelector.V, r1, idx, part, measure)
                worst = max(worst, numerator / (2.0 ** (2.0 * N / r1) * T ** (1.0 / r1) * d_norm))
    return worst


def product_exponents(cfg: SolverConfig):
    """(s1, s2, s1 + s2 - n/p) used by the bilinear estimate."""
    n, p, r1 = cfg.dimension, cfg.monitor_p, cfg.r1
    s1 = -2.0 + n / p + 2.0 / r1
    s2 = -1.0 + n / p + 2.0 / r1
    return s1, s2, s1 + s2 - n / p


def product_estimate_audit(
    grid: Grid,
    cfg: SolverConfig,
    trials: int = 100,
    seed: int = 0,
    horizon: Optional[float] = None,
    time_samples: int = 40,
    part: Optional[DyadicPartition] = None,
) -> AuditReport:
    """
    Product estimate ||fg||_{B^{s1+s2-n/p}} <= C ||f||_{B^{s1}} ||g||_{B^{s2}}

    With a horizon the Chemin-Lerner version is audited on heat flows,
    with time exponents (r1/2, r1, r1).

    Returns:
        AuditReport: max ratio recorded as constant product_max
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if grid.n != cfg.dimension:
        raise ValueError(f"Grid dimension {grid.n} does not match config dimension {cfg.dimension}")
    start_time = time.time()
    rng = np.random.default_rng(seed)
    s1, s2, s_out = product_exponents(cfg)
    p, q = cfg.monitor_p, cfg.monitor_q
    idx1, idx2, idx_out = (BesovIndex(s=s, p=p, q=q) for s in (s1, s2, s_out))
    reach = max(1, (grid.points_per_dim - 1) // 6)
    times = log_time_samples(horizon, time_samples) if horizon else None

    ratios = []
    for _ in range(trials):
        f = random_band_limited(grid, rng, reach)
        g = random_band_limited(grid, rng, reach)
        if times is None:
            denominator = besov_norm(f, idx1, part, cfg.measure) * besov_norm(g, idx2, part, cfg.measure)
            numerator = besov_norm(product(f, g), idx_out, part, cfg.measure)
        else:
            ft = _scalar_heat_trajectory(f, times)
            gt = _scalar_heat_trajectory(g, times)
            zero = SpectralField.zeros(grid)
            fg = Trajectory(times=times, states=[
                StatePair(v=product(a.v, b.v), w=zero) for a, b in zip(ft.states, gt.states)
            ])
            denominator = (
                chemin_lerner_norm(ft, FieldSelector.V, cfg.r1, idx1, part, cfg.measure)
                * chemin_lerner_norm(gt, FieldSelector.V, cfg.r1, idx2, part, cfg.measure)
            )
            numerator = chemin_lerner_norm(fg, FieldSelector.V, cfg.r1 / 2.0, idx_out, part, cfg.measure)
        if denominator > 0:
            ratios.append(numerator / denominator)

    maximum = max(ratios) if ratios else 0.0
    bounded = bool(ratios) and all(math.isfinite(r) for r in ratios)
    report = AuditReport(
        kind="product",
        seed=seed,
        trials=trials,
        rows=[AuditRow(horizon=horizon, max_ratio=maximum, min_ratio=min(ratios) if ratios else 0.0, samples=len(ratios))],
        max_ratio=maximum,
        stable=bounded,
        tolerance=0.0,
        parameters={
            "n": grid.n, "points_per_dim": grid.points_per_dim, "box_length": grid.box_length,
            "s1": s1, "s2": s2, "s_out": s_out, "p": p, "q": q, "r1": cfg.r1, "horizon": horizon,
        },
        constants={"product_max": maximum},
    )
    operation_logger.log_audit_operation(
        "product_estimate", kind="product", duration=time.time() - start_time, max_ratio=maximum,
    )
    return report
