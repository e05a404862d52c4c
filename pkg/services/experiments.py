"""
Experiment drivers: scaling equivariance, Lipschitz stability, the
smallness-threshold sweep, self-similar profile collapse and the audit
wrappers. Every driver is deterministic given its spec.
"""

import logging
import math
import time
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np

from middleware.logging import operation_logger
from schemas.besov import FieldSelector
from schemas.experiments import (
    ExperimentKind,
    ExperimentSpec,
    ExperimentVerdict,
    SelfSimilarProfile,
    SolutionMethod,
)
from schemas.grid import Grid
from schemas.solver import SolverConfig
from services.audits import heat_smoothing_audit, product_estimate_audit
from services.chemin_lerner import Trajectory, chemin_lerner_norm
from services.constant_store import ConstantStore
from services.dh_solver import (
    StatePair,
    estimate_c0,
    evolve,
    fixed_point_solve,
    heat_flow,
    monitor_norm,
    pair_besov_norm,
    potential,
    predicted_lipschitz,
    random_state,
)
from services.exceptions import ExperimentRefusedError, PicardDivergenceError
from services.littlewood_paley import DyadicPartition, bernstein_audit, build_partition
from services.spectral_core import SpectralField, dilate, evaluate_at

logger = logging.getLogger("besov_dh")


def scaled_random_data(
    grid: Grid,
    cfg: SolverConfig,
    rng: np.random.Generator,
    amplitude: float,
    part: Optional[DyadicPartition] = None,
) -> StatePair:
    """Random neutral state rescaled to the given critical Besov norm."""
    state = random_state(grid, rng)
    norm = pair_besov_norm(state, cfg, part)
    return state * (amplitude / norm) if norm > 0 else state * 0.0


def solve(data: StatePair, cfg: SolverConfig, method: SolutionMethod,
          part: Optional[DyadicPartition] = None) -> Trajectory:
    if SolutionMethod(method) is SolutionMethod.PICARD:
        traj, _ = fixed_point_solve(data, cfg, part, compute_residual=False)
        return traj
    return evolve(data, cfg)


def resolve_constants(
    spec: ExperimentSpec,
    grid: Grid,
    cfg: SolverConfig,
    needed: Iterable[str],
    store: Optional[ConstantStore] = None,
    part: Optional[DyadicPartition] = None,
) -> Dict[str, float]:
    """
    Supplied constants first, then the store, then a fresh measurement

    C0 comes from estimate_c0 on cfg; C1 from the heat-smoothing audit at
    time exponent r1 over [0, cfg.horizon].
    """
    measurers: Dict[str, Callable[[], float]] = {
        "C0": lambda: estimate_c0(cfg, grid, spec.trials, spec.seed, part),
        "C1": lambda: heat_smoothing_audit(
            grid, p=cfg.monitor_p, q=cfg.monitor_q, r_values=(cfg.r1,), horizons=(cfg.horizon,),
            trials=spec.trials, seed=spec.seed, r1=cfg.r1, part=part, measure=cfg.measure,
        ).constants["C1"],
    }
    resolved = {}
    for name in needed:
        if name in spec.constants:
            resolved[name] = spec.constants[name]
        elif store is not None:
            resolved[name] = store.get_or_measure(
                name, grid, cfg.model_dump(mode="json"), spec.seed, spec.trials, measurers[name]
            )
        else:
            resolved[name] = measurers[name]()
    return resolved


def _relative_deviation(reference: np.ndarray, candidate: np.ndarray, scale: float) -> float:
    if scale == 0:
        return float(np.max(np.abs(candidate - reference)))
    return float(np.max(np.abs(candidate - reference)) / scale)


def equivariance_experiment(spec: ExperimentSpec, part: Optional[DyadicPartition] = None) -> ExperimentVerdict:
    """
    Compare the run on box L with data d against the run on box L/2 with
    data 4 d(2x), dt/4 and T/4

    Coefficients of the rescaled run must equal 4 times the original ones
    at every step; potentials must agree exactly.
    """
    grid, cfg = spec.grid, spec.solver
    rng = np.random.default_rng(spec.seed)
    data = scaled_random_data(grid, cfg, rng, spec.amplitude, part)
    small_cfg = cfg.model_copy(update={"dt": cfg.step / 4.0, "horizon": cfg.horizon / 4.0})
    dilated = StatePair(v=dilate(data.v, 1), w=dilate(data.w, 1))

    base = solve(data, cfg, spec.method, part)
    scaled = solve(dilated, small_cfg, spec.method, part)

    scale = max(
        max(float(np.max(np.abs(4.0 * s.v.coeffs))), float(np.max(np.abs(4.0 * s.w.coeffs))))
        for s in base.states
    )
    deviations, potential_deviations = [], []
    for a, b in zip(base.states, scaled.states):
        deviations.append(max(
            _relative_deviation(4.0 * a.v.coeffs, b.v.coeffs, scale),
            _relative_deviation(4.0 * a.w.coeffs, b.w.coeffs, scale),
        ))
        phi_a, phi_b = potential(a).coeffs, potential(b).coeffs
        potential_deviations.append(_relative_deviation(phi_a, phi_b, float(np.max(np.abs(phi_a)))))

    tolerance = spec.resolved_tolerance()
    max_deviation = max(deviations)
    max_potential = max(potential_deviations)
    return ExperimentVerdict(
        spec=spec.model_dump(mode="json"),
        metrics={
            "max_relative_deviation": max_deviation,
            "max_potential_deviation": max_potential,
            "steps": len(base) - 1,
            "data_norm": pair_besov_norm(data, cfg, part),
            "scale_factor": 2.0,
        },
        passed=max_deviation <= tolerance and max_potential <= tolerance,
        series={"time": [float(t) for t in base.times], "deviation": deviations,
                "potential_deviation": potential_deviations},
    )


def solution_difference_ratios(
    base: Trajectory,
    perturbed: Trajectory,
    delta_norm: float,
    cfg: SolverConfig,
    r_values: Iterable[float],
    part: Optional[DyadicPartition] = None,
) -> Dict[float, float]:
    """||u - u~||_{CL^r(B^{-2+n/p+2/r})} / ||d - d~||_{B^{-2+n/p}} for every r."""
    difference = perturbed - base
    ratios = {}
    for r in r_values:
        idx = cfg.critical_index.shifted(0.0 if math.isinf(r) else 2.0 / r)
        norm = chemin_lerner_norm(difference, FieldSelector.PAIR, r, idx, part, cfg.measure)
        ratios[r] = norm / delta_norm if delta_norm > 0 else 0.0
    return ratios


def continuation_intervals(m_value: float, r1: float) -> int:
    """Pieces of [0, T] needed so that each carries M <= 1/2, assuming M scales like T^{1/r1}."""
    if m_value <= 0.5:
        return 1
    return int(math.ceil((2.0 * m_value) ** r1))


def stability_experiment(
    spec: ExperimentSpec,
    part: Optional[DyadicPartition] = None,
    constants: Optional[Dict[str, float]] = None,
) -> ExperimentVerdict:
    """
    Solve for d and d + delta with ||delta|| swept over the perturbation
    magnitudes; the difference ratio per r must vary by less than the
    tolerance factor across magnitudes.
    """
    grid, cfg = spec.grid, spec.solver
    rng = np.random.default_rng(spec.seed)
    data = scaled_random_data(grid, cfg, rng, spec.amplitude, part)
    direction = scaled_random_data(grid, cfg, rng, 1.0, part)
    data_norm = pair_besov_norm(data, cfg, part)
    base = solve(data, cfg, spec.method, part)
    base_monitor = monitor_norm(base, cfg, part)
    constants = dict(constants or spec.constants)

    ratios: Dict[float, List[float]] = {r: [] for r in spec.r_values}
    lipschitz: List[float] = []
    m_values: List[float] = []
    for magnitude in spec.perturbations:
        delta = direction * (magnitude * (data_norm if data_norm > 0 else 1.0))
        perturbed = solve(data + delta, cfg, spec.method, part)
        delta_norm = pair_besov_norm(delta, cfg, part)
        for r, value in solution_difference_ratios(base, perturbed, delta_norm, cfg, spec.r_values, part).items():
            ratios[r].append(value)
        heat_difference = monitor_norm(heat_flow(delta, cfg.time_grid()), cfg, part)
        if heat_difference > 0:
            lipschitz.append(monitor_norm(perturbed - base, cfg, part) / heat_difference)
        if "C0" in constants:
            m_values.append(constants["C0"] * (base_monitor + monitor_norm(perturbed, cfg, part)))

    tolerance = spec.resolved_tolerance()
    spreads = {}
    passed = True
    notes = []
    for r, values in ratios.items():
        finite = all(math.isfinite(v) for v in values)
        low, high = min(values), max(values)
        spread = high / low if low > 0 else (1.0 if high == 0 else math.inf)
        spreads[_r_label(r)] = spread
        if not finite or spread >= tolerance:
            passed = False
            notes.append(f"r={_r_label(r)}: ratio spread {spread:.3f} not below {tolerance:g}")

    metrics = {
        "ratios": {_r_label(r): values for r, values in ratios.items()},
        "spread": spreads,
        "perturbations": list(spec.perturbations),
        "data_norm": data_norm,
        "measured_lipschitz": max(lipschitz) if lipschitz else None,
    }
    if "C0" in constants:
        eps = monitor_norm(heat_flow(data, cfg.time_grid()), cfg, part)
        m_max = max(m_values) if m_values else 0.0
        metrics.update({
            "predicted_lipschitz": predicted_lipschitz(eps, constants["C0"]),
            "continuation_constant": m_max,
            "continuation_intervals": continuation_intervals(m_max, cfg.r1),
        })
    return ExperimentVerdict(
        spec=spec.model_dump(mode="json"),
        constants=constants,
        metrics=metrics,
        passed=passed,
        notes=notes,
        series={"perturbation": list(spec.perturbations),
                **{f"ratio_r{_r_label(r)}": values for r, values in ratios.items()}},
    )


def _r_label(r: float) -> str:
    return "inf" if math.isinf(r) else f"{r:g}"


def long_horizon(grid: Grid, factor: float) -> float:
    """factor diffusion times of the lowest shell, factor (L / 2 pi)^2."""
    return factor * (grid.box_length / (2.0 * math.pi)) ** 2


def threshold_sweep(
    spec: ExperimentSpec,
    part: Optional[DyadicPartition] = None,
    store: Optional[ConstantStore] = None,
) -> ExperimentVerdict:
    """
    Bisect in log amplitude between Picard convergence and divergence on
    the long horizon; compare the critical amplitude with 1/(4 C0 C1).
    """
    grid = spec.grid
    horizon = long_horizon(grid, spec.long_horizon_factor)
    cfg = spec.solver.model_copy(update={"horizon": horizon, "dt": horizon / spec.sweep_steps})
    constants = resolve_constants(spec, grid, cfg, ("C0", "C1"), store, part)
    rng = np.random.default_rng(spec.seed)
    direction = scaled_random_data(grid, cfg, rng, 1.0, part)

    outcomes: Dict[float, bool] = {}

    def converges(amplitude: float) -> bool:
        if amplitude not in outcomes:
            try:
                fixed_point_solve(direction * amplitude, cfg, part, compute_residual=False)
                outcomes[amplitude] = True
            except PicardDivergenceError:
                outcomes[amplitude] = False
            logger.debug(f"Sweep amplitude {amplitude:.4e}: {'converged' if outcomes[amplitude] else 'diverged'}")
        return outcomes[amplitude]

    notes = []
    low, high = spec.amplitude_low, spec.amplitude_high
    for _ in range(3):
        if converges(low):
            break
        low /= 10.0
    for _ in range(3):
        if not converges(high):
            break
        high *= 10.0
    bracketed = converges(low) and not converges(high)

    samples = np.geomspace(low, high, spec.monotonicity_samples)
    pattern = [converges(float(a)) for a in samples]
    monotone = all(not (later and not earlier) for earlier, later in zip(pattern, pattern[1:]))
    if not monotone:
        notes.append("re-entrant convergence observed in the amplitude sweep")

    critical = None
    if bracketed:
        for _ in range(spec.bisection_steps):
            middle = math.sqrt(low * high)
            if converges(middle):
                low = middle
            else:
                high = middle
        critical = math.sqrt(low * high)
    else:
        notes.append("could not bracket the convergence threshold")

    predicted = 1.0 / (4.0 * constants["C0"] * constants["C1"])
    decades = abs(math.log10(critical / predicted)) if critical else math.inf
    passed = bracketed and monotone and decades <= spec.resolved_tolerance()
    amplitudes = sorted(outcomes)
    return ExperimentVerdict(
        spec=spec.model_dump(mode="json"),
        constants=constants,
        metrics={
            "critical_amplitude": critical,
            "predicted_threshold": predicted,
            "decades_from_prediction": decades,
            "monotone": monotone,
            "bracketed": bracketed,
            "long_horizon": horizon,
            "evaluations": len(outcomes),
        },
        passed=passed,
        notes=notes,
        series={"amplitude": amplitudes, "converged": [1.0 if outcomes[a] else 0.0 for a in amplitudes]},
    )


def self_similar_data(grid: Grid, spec: ExperimentSpec, part: Optional[DyadicPartition] = None) -> Tuple[StatePair, float]:
    """
    Degree -2 data centered in the box, already heat-smoothed at scale
    sigma = r_in^2, and the time offset sigma

    quadrupole: v0 = a chi(r / r_out) cos(2 theta) (1 - (1 + rho) e^{-rho}) / r^2
    with rho = r^2 / (4 sigma), which is e^{sigma Delta} applied to
    a cos(2 theta) / r^2; w0 = -v0 and the means are removed.
    heat_kernel: v0 = w0 = a G_sigma. Both collapse in the variable
    t + sigma.
    """
    part = part if part is not None else build_partition()
    center = grid.box_length / 2.0
    offsets = [axis - center for axis in grid.coordinates()]
    r_squared = sum(d**2 for d in offsets)
    sigma = (spec.inner_cells * grid.spacing) ** 2
    r_out = spec.outer_fraction * grid.box_length
    rho = r_squared / (4.0 * sigma)
    if SelfSimilarProfile(spec.profile) is SelfSimilarProfile.HEAT_KERNEL:
        values = spec.amplitude * np.exp(-rho) / (4.0 * math.pi * sigma)
        field = SpectralField.from_values(values, grid)
        return StatePair(v=field, w=field), sigma
    radius = np.sqrt(r_squared)
    safe = np.where(r_squared > 0, r_squared, 1.0)
    dx, dy = offsets
    cos_two_theta = np.where(r_squared > 0, (dx**2 - dy**2) / safe, 0.0)
    # -expm1(-rho) - rho e^{-rho} ~ rho^2 / 2 keeps the center finite
    smoothed = -np.expm1(-rho) - rho * np.exp(-rho)
    values = spec.amplitude * part.chi(radius / r_out) * cos_two_theta * smoothed / safe
    field = SpectralField.from_values(values, grid).with_mean(0.0)
    return StatePair(v=field, w=-field), sigma


def self_similar_experiment(
    spec: ExperimentSpec,
    part: Optional[DyadicPartition] = None,
    store: Optional[ConstantStore] = None,
) -> ExperimentVerdict:
    """
    Profile collapse tau v(sqrt(tau) y, tau - sigma) across dyadic tau

    The data sit at similarity time sigma = r_in^2, so the solver runs
    to tau_max - sigma. Profiles are evaluated exactly from the Fourier
    series on a window of the similarity variable around the box center
    and compared with the profile at the latest time.

    Raises:
        ExperimentRefusedError: If the quadrupole data exceed the smallness
            threshold 1/(4 C0 C1)
    """
    grid = spec.grid
    data, offset = self_similar_data(grid, spec, part)
    r_in = spec.inner_cells * grid.spacing
    base_time = spec.base_time or offset
    taus = [base_time * 2.0**i for i in range(spec.time_doublings + 1)]
    steps_per_base = 8
    horizon = max(taus[-1] - offset, base_time / steps_per_base)
    cfg = spec.solver.model_copy(update={"horizon": horizon, "dt": base_time / steps_per_base})

    constants: Dict[str, float] = {}
    metrics: Dict[str, float] = {"data_norm": pair_besov_norm(data, cfg, part)}
    if SelfSimilarProfile(spec.profile) is SelfSimilarProfile.QUADRUPOLE:
        coarse = Grid(n=grid.n, points_per_dim=32, box_length=grid.box_length)
        coarse_cfg = cfg.model_copy(update={"dt": cfg.horizon / 16})
        constants = resolve_constants(spec, coarse, coarse_cfg, ("C0", "C1"), store, part)
        threshold = 1.0 / (4.0 * constants["C0"] * constants["C1"])
        metrics["threshold"] = threshold
        if metrics["data_norm"] > threshold:
            raise ExperimentRefusedError(
                f"Data norm {metrics['data_norm']:.3e} exceeds the smallness threshold {threshold:.3e}",
                {"data_norm": metrics["data_norm"], "threshold": threshold},
            )

    traj = solve(data, cfg, spec.method, part)
    axis = np.linspace(-spec.window, spec.window, spec.window_points)
    mesh = np.stack([m.ravel() for m in np.meshgrid(*([axis] * grid.n), indexing="ij")], axis=1)
    center = np.full(grid.n, grid.box_length / 2.0)

    profiles = []
    for tau_target in taus:
        index = min(int(round((tau_target - offset) / cfg.step)), len(traj) - 1)
        tau = float(traj.times[index]) + offset
        points = center + math.sqrt(tau) * mesh
        profiles.append(tau * evaluate_at(traj.states[index].v, points))
    reference = profiles[-1]
    scale = float(np.max(np.abs(reference)))
    deviations = [_relative_deviation(reference, profile, scale) for profile in profiles[:-1]]

    notes = []
    reach = math.sqrt(taus[-1]) * spec.window * math.sqrt(grid.n)
    if reach > spec.outer_fraction * grid.box_length:
        notes.append(f"window reaches {reach:.3g}, beyond the outer cutoff {spec.outer_fraction * grid.box_length:.3g}")
    max_deviation = max(deviations)
    metrics.update({
        "max_profile_deviation": max_deviation,
        "times": taus,
        "smoothing_time": offset,
        "window_reach": reach,
        "inner_cutoff": r_in,
        "outer_cutoff": spec.outer_fraction * grid.box_length,
    })
    return ExperimentVerdict(
        spec=spec.model_dump(mode="json"),
        constants=constants,
        metrics=metrics,
        passed=max_deviation < spec.resolved_tolerance(),
        notes=notes,
        series={"time": taus[:-1], "profile_deviation": deviations},
    )


def _audit_verdict(spec: ExperimentSpec, report, passed: bool) -> ExperimentVerdict:
    return ExperimentVerdict(
        spec=spec.model_dump(mode="json"),
        constants=report.constants,
        metrics=report.model_dump(mode="json"),
        passed=passed,
        notes=list(report.notes),
        series={"max_ratio": [row.max_ratio for row in report.rows]},
    )


def heat_audit_experiment(spec: ExperimentSpec, part: Optional[DyadicPartition] = None) -> ExperimentVerdict:
    report = heat_smoothing_audit(
        spec.grid, p=spec.solver.monitor_p, q=spec.solver.monitor_q, r_values=spec.r_values,
        horizons=spec.horizons, trials=spec.trials, seed=spec.seed, r1=spec.solver.r1, part=part,
        measure=spec.solver.measure, tolerance=spec.resolved_tolerance(),
    )
    return _audit_verdict(spec, report, report.stable)


def bernstein_audit_experiment(spec: ExperimentSpec, part: Optional[DyadicPartition] = None) -> ExperimentVerdict:
    report = bernstein_audit(
        part, spec.grid, spec.s, spec.p, spec.q, spec.trials, spec.seed, spec.shells, spec.resolved_tolerance(),
    )
    return _audit_verdict(spec, report, report.stable)


def product_audit_experiment(spec: ExperimentSpec, part: Optional[DyadicPartition] = None) -> ExperimentVerdict:
    report = product_estimate_audit(
        spec.grid, spec.solver, trials=spec.trials, seed=spec.seed, horizon=spec.audit_horizon, part=part,
    )
    return _audit_verdict(spec, report, report.stable and report.max_ratio <= spec.resolved_tolerance())


def run_experiment(
    spec: ExperimentSpec,
    part: Optional[DyadicPartition] = None,
    store: Optional[ConstantStore] = None,
) -> ExperimentVerdict:
    """
    Dispatch a spec to its driver and log the outcome

    Args:
        spec: Validated experiment spec
        part: Partition (default if None)
        store: Optional constant store for reusing measured constants

    Returns:
        ExperimentVerdict: Verdict with metrics and pass flag
    """
    start_time = time.time()
    kind = ExperimentKind(spec.kind)
    drivers = {
        ExperimentKind.EQUIVARIANCE: lambda: equivariance_experiment(spec, part),
        ExperimentKind.STABILITY: lambda: stability_experiment(spec, part),
        ExperimentKind.THRESHOLD_SWEEP: lambda: threshold_sweep(spec, part, store),
        ExperimentKind.SELF_SIMILAR: lambda: self_similar_experiment(spec, part, store),
        ExperimentKind.HEAT_AUDIT: lambda: heat_audit_experiment(spec, part),
        ExperimentKind.BERNSTEIN_AUDIT: lambda: bernstein_audit_experiment(spec, part),
        ExperimentKind.PRODUCT_AUDIT: lambda: product_audit_experiment(spec, part),
    }
    try:
        verdict = drivers[kind]()
    except Exception as e:
        operation_logger.log_experiment_operation(
            "run", kind=kind.value, success=False, error=str(e), duration=time.time() - start_time,
        )
        raise
    duration = time.time() - start_time
    operation_logger.log_experiment_operation(
        "run", kind=kind.value, duration=duration, passed=verdict.passed, seed=spec.seed,
    )
    if store is not None:
        store.record_run(kind.value, spec.seed, spec.model_dump(mode="json"), verdict, verdict.passed, duration)
    return verdict
