"""
Debye-Hückel drift-diffusion system in mild form.

    dv/dt = Delta v - div(v grad psi),   dw/dt = Delta w + div(w grad psi),
    psi = (-Delta)^{-1}(w - v)

The heat part is always applied through its exact Fourier symbol; only
the quadratic term is discretized in time.
"""

import logging
import math
import time
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import exprel

from middleware.logging import operation_logger
from schemas.besov import FieldSelector
from schemas.grid import Grid
from schemas.reports import (
    AuditReport,
    AuditRow,
    BlowUpReport,
    ConvergenceReport,
    HorizonSelection,
    IterateRecord,
)
from schemas.solver import SolverConfig
from services.chemin_lerner import (
    Trajectory,
    chemin_lerner_norm,
    continuity_jump,
    regularity_profile,
)
from services.exceptions import (
    BlowUpError,
    GridMismatchError,
    HorizonSelectionError,
    NonNeutralStateError,
    PicardDivergenceError,
)
from services.littlewood_paley import DyadicPartition, besov_norm, frequency_split
from services.spectral_core import (
    SpectralField,
    divergence,
    heat_propagator,
    inverse_laplacian,
    inverse_laplacian_gradient,
    product,
    random_band_limited,
)

logger = logging.getLogger("besov_dh")

NEUTRALITY_TOL = 1e-12
DIVERGENCE_FACTOR = 1e6


class StatePair(BaseModel):
    """Electron and hole density deviations (v, w); the potential is always derived."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    v: SpectralField
    w: SpectralField

    @model_validator(mode="after")
    def validate_same_grid(self) -> "StatePair":
        if self.v.grid != self.w.grid:
            raise ValueError("v and w must live on the same grid")
        return self

    @classmethod
    def zeros(cls, grid: Grid) -> "StatePair":
        zero = SpectralField.zeros(grid)
        return cls(v=zero, w=zero)

    @classmethod
    def from_values(cls, v: np.ndarray, w: np.ndarray, grid: Grid) -> "StatePair":
        return cls(v=SpectralField.from_values(v, grid), w=SpectralField.from_values(w, grid))

    @property
    def grid(self) -> Grid:
        return self.v.grid

    @property
    def net_charge(self) -> float:
        """mean(v) - mean(w)"""
        return self.v.mean - self.w.mean

    def is_neutral(self, tol: float = NEUTRALITY_TOL) -> bool:
        scale = max(1.0, abs(self.v.mean) + abs(self.w.mean))
        return abs(self.net_charge) <= tol * scale

    def map(self, fn) -> "StatePair":
        return StatePair(v=fn(self.v), w=fn(self.w))

    def __add__(self, other: "StatePair") -> "StatePair":
        return StatePair(v=self.v + other.v, w=self.w + other.w)

    def __sub__(self, other: "StatePair") -> "StatePair":
        return StatePair(v=self.v - other.v, w=self.w - other.w)

    def __mul__(self, scalar: float) -> "StatePair":
        return StatePair(v=self.v * scalar, w=self.w * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "StatePair":
        return StatePair(v=-self.v, w=-self.w)

    @property
    def max_amplitude(self) -> float:
        return max(self.v.max_abs(), self.w.max_abs())

    def all_finite(self) -> bool:
        return bool(np.isfinite(self.v.coeffs).all() and np.isfinite(self.w.coeffs).all())


def project_neutral(state: StatePair) -> Tuple[StatePair, float]:
    """
    Give v and w the common mean (mean v + mean w) / 2

    Returns:
        Tuple[StatePair, float]: Neutral state and the removed net charge
    """
    shared = 0.5 * (state.v.mean + state.w.mean)
    projected = StatePair(v=state.v.with_mean(shared), w=state.w.with_mean(shared))
    return projected, state.net_charge


def _require_neutral(state: StatePair, cfg: Optional[SolverConfig] = None) -> StatePair:
    if state.is_neutral():
        return state
    if cfg is not None and cfg.auto_project:
        projected, charge = project_neutral(state)
        logger.warning(f"Projected non-neutral data, removed net charge {charge:.3e}")
        return projected
    raise NonNeutralStateError(state.net_charge)


def _require_dimension(state: StatePair, cfg: SolverConfig) -> None:
    if state.grid.n != cfg.dimension:
        raise GridMismatchError(
            f"Config is for n={cfg.dimension} but data lives on an n={state.grid.n} grid"
        )


def potential(state: StatePair, cfg: Optional[SolverConfig] = None) -> SpectralField:
    """
    Potential phi = (-Delta)^{-1}(w - v) with zero mean, so Delta phi = v - w

    Raises:
        NonNeutralStateError: If mean(v) != mean(w) and cfg does not auto-project
    """
    state = _require_neutral(state, cfg)
    return inverse_laplacian(state.w - state.v)


def nonlinearity(a: StatePair, b: StatePair, dealias: bool = True) -> StatePair:
    """Drift tendencies (-div(a.v grad psi_b), +div(a.w grad psi_b)) with psi_b from b."""
    grad_psi = inverse_laplacian_gradient(b.w - b.v)
    flux_v = [product(a.v, g, dealias) for g in grad_psi]
    flux_w = [product(a.w, g, dealias) for g in grad_psi]
    return StatePair(v=-divergence(flux_v), w=divergence(flux_w))


def symmetric_nonlinearity(a: StatePair, b: StatePair, dealias: bool = True) -> StatePair:
    if a is b:
        return nonlinearity(a, a, dealias)
    return (nonlinearity(a, b, dealias) + nonlinearity(b, a, dealias)) * 0.5


def rhs(state: StatePair, cfg: Optional[SolverConfig] = None) -> StatePair:
    """Nonlinear tendencies of a neutral state; both have zero mean."""
    state = _require_neutral(state, cfg)
    return nonlinearity(state, state, cfg.dealias if cfg is not None else True)


def phi_functions(z: np.ndarray, order: int) -> List[np.ndarray]:
    """
    Exponential-integrator weights phi_1..phi_order of z

    phi_1(z) = (e^z - 1)/z and phi_{k+1}(z) = (phi_k(z) - 1/k!)/z, with a
    Taylor series for |z| < 1.
    """
    z = np.asarray(z, dtype=np.float64)
    small = np.abs(z) < 1.0
    safe = np.where(small, 1.0, z)
    result = [exprel(z)]
    for k in range(2, order + 1):
        series = sum(z**i / math.factorial(i + k) for i in range(20))
        recursive = (result[-1] - 1.0 / math.factorial(k - 1)) / safe
        result.append(np.where(small, series, recursive))
    return result


class _StepWeights:
    """Heat symbol and phi weights for one step size on one grid."""

    def __init__(self, grid: Grid, h: float):
        z = -grid.k_squared * h
        self.h = h
        self.decay = np.exp(z)
        self.phi1, self.phi2, self.phi3 = phi_functions(z, 3)


def _combine(state: StatePair, fn) -> StatePair:
    return StatePair(v=state.v.with_coeffs(fn(state.v.coeffs)), w=state.w.with_coeffs(fn(state.w.coeffs)))


def heat_flow(data: StatePair, times: np.ndarray) -> Trajectory:
    """Trajectory of (e^{t Delta} v0, e^{t Delta} w0) on the given times."""
    states = [data.map(lambda f, t=t: heat_propagator(f, float(t))) for t in times]
    return Trajectory(times=times, states=states)


def bilinear_B(a: Trajectory, b: Trajectory, dealias: bool = True) -> Trajectory:
    """
    Symmetrized Duhamel term int_0^t e^{(t-tau) Delta} N(a, b)(tau) dtau

    Exponential trapezoid: the heat symbol is exact between samples and
    the integrand is linear in time on each step.

    Raises:
        GridMismatchError: If a and b are sampled differently
    """
    a.require_same_sampling(b)
    grid = a.grid
    tendencies = [symmetric_nonlinearity(sa, sb, dealias) for sa, sb in zip(a.states, b.states)]
    weights: Dict[float, _StepWeights] = {}
    current = StatePair.zeros(grid)
    states = [current]
    for m in range(len(a.times) - 1):
        h = float(a.times[m + 1] - a.times[m])
        key = round(h, 15)
        if key not in weights:
            weights[key] = _StepWeights(grid, h)
        wt = weights[key]
        n_now, n_next = tendencies[m], tendencies[m + 1]
        current = StatePair(
            v=current.v.with_coeffs(
                wt.decay * current.v.coeffs
                + h * ((wt.phi1 - wt.phi2) * n_now.v.coeffs + wt.phi2 * n_next.v.coeffs)
            ),
            w=current.w.with_coeffs(
                wt.decay * current.w.coeffs
                + h * ((wt.phi1 - wt.phi2) * n_now.w.coeffs + wt.phi2 * n_next.w.coeffs)
            ),
        )
        states.append(current)
    return Trajectory(times=a.times, states=states)


def _require_time_grid(traj: Trajectory, cfg: SolverConfig) -> None:
    expected = cfg.time_grid()
    if len(traj.times) != len(expected) or not np.allclose(traj.times, expected, rtol=1e-12, atol=1e-15):
        raise GridMismatchError(
            "Trajectory is not sampled on the configured uniform time grid",
            {"expected_samples": len(expected), "got_samples": len(traj.times)},
        )


def picard_map(traj: Trajectory, data: StatePair, cfg: SolverConfig) -> Trajectory:
    """G(u) = heat flow of data + B(u, u) on cfg's uniform grid."""
    _require_time_grid(traj, cfg)
    data = _require_neutral(data, cfg)
    return heat_flow(data, traj.times) + bilinear_B(traj, traj, cfg.dealias)


def monitor_norm(traj: Trajectory, cfg: SolverConfig, part: Optional[DyadicPartition] = None) -> float:
    """Pair norm in the Chemin-Lerner monitor space of cfg."""
    return chemin_lerner_norm(traj, FieldSelector.PAIR, cfg.r1, cfg.monitor_index, part, cfg.measure)


def mild_residual(
    traj: Trajectory,
    data: StatePair,
    cfg: SolverConfig,
    part: Optional[DyadicPartition] = None,
) -> Optional[float]:
    """
    Relative residual of the mild formulation on even-indexed samples

    The Duhamel integral of the trajectory's own tendencies is recomputed
    with an exponential Simpson rule over pairs of steps and compared with
    u - heat flow; None when there are fewer than two steps.
    """
    steps = len(traj.times) - 1
    if steps < 2:
        return None
    even = steps - steps % 2
    grid = traj.grid
    dealias = cfg.dealias
    h = float(traj.times[1] - traj.times[0])
    z = -grid.k_squared * 2.0 * h
    decay = np.exp(z)
    phi1, phi2, phi3 = phi_functions(z, 3)
    w0 = phi1 - 3.0 * phi2 + 4.0 * phi3
    w1 = 4.0 * phi2 - 8.0 * phi3
    w2 = 4.0 * phi3 - phi2
    tendencies = [nonlinearity(s, s, dealias) for s in traj.states[: even + 1]]

    duhamel = StatePair.zeros(grid)
    residuals = [traj.states[0] - data]
    for m in range(0, even, 2):
        n0, n1, n2 = tendencies[m], tendencies[m + 1], tendencies[m + 2]
        duhamel = StatePair(
            v=duhamel.v.with_coeffs(
                decay * duhamel.v.coeffs + 2.0 * h * (w0 * n0.v.coeffs + w1 * n1.v.coeffs + w2 * n2.v.coeffs)
            ),
            w=duhamel.w.with_coeffs(
                decay * duhamel.w.coeffs + 2.0 * h * (w0 * n0.w.coeffs + w1 * n1.w.coeffs + w2 * n2.w.coeffs)
            ),
        )
        t = float(traj.times[m + 2])
        linear = data.map(lambda f: heat_propagator(f, t))
        residuals.append(traj.states[m + 2] - linear - duhamel)

    residual_traj = Trajectory(times=traj.times[: even + 1 : 2], states=residuals)
    reference = Trajectory(times=traj.times[: even + 1 : 2], states=traj.states[: even + 1 : 2])
    scale = monitor_norm(reference, cfg, part)
    if scale == 0:
        return 0.0
    return monitor_norm(residual_traj, cfg, part) / scale


def fixed_point_solve(
    data: StatePair,
    cfg: SolverConfig,
    part: Optional[DyadicPartition] = None,
    constant_c0: Optional[float] = None,
    compute_residual: bool = True,
) -> Tuple[Trajectory, ConvergenceReport]:
    """
    Picard iteration u^0 = heat flow, u^{m+1} = G(u^m)

    Args:
        data: Neutral initial state
        cfg: Solver configuration
        part: Partition for the monitor norm
        constant_c0: Empirical bilinear constant, enables the predicted
            Lipschitz bound in the report
        compute_residual: Evaluate the mild residual after convergence

    Returns:
        Tuple[Trajectory, ConvergenceReport]: Fixed point and report

    Raises:
        PicardDivergenceError: If the increment does not fall below
            picard_tol within picard_max_iter iterations
    """
    start_time = time.time()
    _require_dimension(data, cfg)
    data = _require_neutral(data, cfg)
    times = cfg.time_grid()

    heat = heat_flow(data, times)
    heat_norm = monitor_norm(heat, cfg, part)
    ball_radius = 2.0 * heat_norm
    ceiling = DIVERGENCE_FACTOR * max(heat_norm, np.finfo(float).tiny)

    current = heat
    history: List[IterateRecord] = []
    previous_increment = None
    converged = False
    for index in range(1, cfg.picard_max_iter + 1):
        iterate_start = time.perf_counter()
        candidate = heat + bilinear_B(current, current, cfg.dealias)
        norm = monitor_norm(candidate, cfg, part)
        increment = monitor_norm(candidate - current, cfg, part)
        ratio = increment / previous_increment if previous_increment else None
        record = IterateRecord(
            index=index,
            monitor_norm=norm,
            increment=increment,
            contraction_ratio=ratio,
            inside_ball=bool(norm <= ball_radius * (1.0 + 1e-12)),
            wall_time=time.perf_counter() - iterate_start,
        )
        history.append(record)
        logger.debug(f"Picard iterate {index}: norm {norm:.6e}, increment {increment:.6e}, ratio {ratio}")

        if not (math.isfinite(norm) and math.isfinite(increment)) or norm > ceiling:
            break
        current = candidate
        if increment <= cfg.picard_tol * norm:
            converged = True
            break
        previous_increment = increment

    ratios = [r.contraction_ratio for r in history if r.contraction_ratio is not None]
    report = ConvergenceReport(
        converged=converged,
        iterations=len(history),
        history=history,
        heat_flow_norm=heat_norm,
        ball_radius=ball_radius,
        ball_ok=all(r.inside_ball for r in history),
        contraction_ratio=max(ratios) if ratios else None,
        asymptotic_ratio=ratios[-1] if ratios else None,
        tolerance=cfg.picard_tol,
        horizon=cfg.horizon,
        dt=cfg.step,
        constant_c0=constant_c0,
        predicted_lipschitz=predicted_lipschitz(heat_norm, constant_c0),
    )

    duration = time.time() - start_time
    if not converged:
        operation_logger.log_solver_operation(
            "picard", success=False, error="no convergence", duration=duration,
            iterations=len(history), heat_flow_norm=heat_norm,
        )
        raise PicardDivergenceError(
            f"Picard iteration did not converge in {len(history)} iterations "
            f"(heat-flow norm {heat_norm:.3e}, horizon {cfg.horizon:g})",
            report,
        )

    n, p, q = cfg.dimension, cfg.monitor_p, cfg.monitor_q
    profile = regularity_profile(current, n, p, q, (cfg.r1 / 2.0, cfg.r1, 2.0 * cfg.r1, math.inf), part, cfg.measure)
    report = report.model_copy(update={
        "regularity_profile": profile,
        "continuity_jump": continuity_jump(current, cfg.critical_index, part, cfg.measure),
        "mild_residual": mild_residual(current, data, cfg, part) if compute_residual else None,
    })
    operation_logger.log_solver_operation(
        "picard", success=True, duration=time.time() - start_time,
        iterations=report.iterations, contraction_ratio=report.contraction_ratio,
        heat_flow_norm=heat_norm, ball_ok=report.ball_ok,
    )
    return current, report


def predicted_lipschitz(eps: float, constant_c0: Optional[float]) -> Optional[float]:
    """Continuous-dependence bound 1/(1 - 4 eps C0) of the contraction argument."""
    if constant_c0 is None:
        return None
    contraction = 4.0 * eps * constant_c0
    return 1.0 / (1.0 - contraction) if contraction < 1.0 else None


def random_state(grid: Grid, rng: np.random.Generator, max_index: Optional[int] = None) -> StatePair:
    """Neutral random band-limited pair (zero means) inside the dealiased band."""
    if max_index is None:
        max_index = max(1, (grid.points_per_dim - 1) // 6)
    v = random_band_limited(grid, rng, max_index)
    w = random_band_limited(grid, rng, max_index)
    return StatePair(v=v, w=w)


def estimate_c0_report(
    cfg: SolverConfig,
    grid: Grid,
    trials: int,
    seed: int = 0,
    part: Optional[DyadicPartition] = None,
    max_index: Optional[int] = None,
) -> AuditReport:
    """
    Empirical bilinear constant max ||B(u, u)|| / ||u||^2 in the monitor norm

    Each trial uses the heat flow of a random band-limited neutral state,
    drawn independently of M so the estimate can be compared across grid
    refinements.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    _require_dimension(StatePair.zeros(grid), cfg)
    start_time = time.time()
    rng = np.random.default_rng(seed)
    times = cfg.time_grid()
    ratios = []
    for _ in range(trials):
        u = heat_flow(random_state(grid, rng, max_index), times)
        size = monitor_norm(u, cfg, part)
        if size == 0:
            continue
        ratios.append(monitor_norm(bilinear_B(u, u, cfg.dealias), cfg, part) / size**2)
    maximum = max(ratios) if ratios else 0.0
    operation_logger.log_audit_operation(
        "estimate", kind="c0", duration=time.time() - start_time, trials=trials, max_ratio=maximum,
    )
    return AuditReport(
        kind="c0",
        seed=seed,
        trials=trials,
        rows=[AuditRow(horizon=cfg.horizon, r=cfg.r1, max_ratio=maximum,
                       min_ratio=min(ratios) if ratios else 0.0, samples=len(ratios))],
        max_ratio=maximum,
        stable=bool(ratios) and all(math.isfinite(r) and r > 0 for r in ratios),
        tolerance=0.5,
        parameters={
            "n": grid.n, "points_per_dim": grid.points_per_dim, "box_length": grid.box_length,
            "horizon": cfg.horizon, "dt": cfg.step, "r1": cfg.r1, "p": cfg.monitor_p, "q": cfg.monitor_q,
        },
        constants={"C0": maximum},
    )


def estimate_c0(
    cfg: SolverConfig,
    grid: Grid,
    trials: int,
    seed: int = 0,
    part: Optional[DyadicPartition] = None,
    max_index: Optional[int] = None,
) -> float:
    """The constant C0 from estimate_c0_report."""
    return estimate_c0_report(cfg, grid, trials, seed, part, max_index).max_ratio


def _blowup_time(times: List[float], amplitudes: List[float]) -> Optional[float]:
    """Extrapolate A ~ c / (T* - t) from the last two finite samples."""
    if len(times) < 2:
        return None
    (t1, a1), (t2, a2) = (times[-2], amplitudes[-2]), (times[-1], amplitudes[-1])
    if not (a2 > a1 > 0) or t2 <= t1:
        return None
    slope = (1.0 / a1 - 1.0 / a2) / (t2 - t1)
    return t2 + (1.0 / a2) / slope


def evolve(data: StatePair, cfg: SolverConfig) -> Trajectory:
    """
    Second-order exponential time differencing (ETD-RK2)

    a = e^{hL} u + h phi_1 N(u),  u+ = a + h phi_2 (N(a) - N(u))

    Raises:
        BlowUpError: On non-finite values or amplitude above cfg.blowup_amplitude
    """
    start_time = time.time()
    _require_dimension(data, cfg)
    data = _require_neutral(data, cfg)
    times = cfg.time_grid()
    weights = _StepWeights(data.grid, cfg.step)
    h = cfg.step

    current = data
    states = [current]
    amplitude_times = [0.0]
    amplitudes = [current.max_amplitude]
    for m in range(1, len(times)):
        n_now = nonlinearity(current, current, cfg.dealias)
        stage = StatePair(
            v=current.v.with_coeffs(weights.decay * current.v.coeffs + h * weights.phi1 * n_now.v.coeffs),
            w=current.w.with_coeffs(weights.decay * current.w.coeffs + h * weights.phi1 * n_now.w.coeffs),
        )
        n_stage = nonlinearity(stage, stage, cfg.dealias)
        candidate = StatePair(
            v=stage.v.with_coeffs(stage.v.coeffs + h * weights.phi2 * (n_stage.v.coeffs - n_now.v.coeffs)),
            w=stage.w.with_coeffs(stage.w.coeffs + h * weights.phi2 * (n_stage.w.coeffs - n_now.w.coeffs)),
        )
        amplitude = candidate.max_amplitude if candidate.all_finite() else math.inf
        if not math.isfinite(amplitude) or amplitude > cfg.blowup_amplitude:
            report = BlowUpReport(
                last_finite_time=amplitude_times[-1],
                steps_completed=m - 1,
                amplitude_times=amplitude_times,
                amplitudes=amplitudes,
                estimated_blowup_time=_blowup_time(amplitude_times, amplitudes),
                threshold=cfg.blowup_amplitude,
            )
            operation_logger.log_solver_operation(
                "evolve", success=False, error="blow-up", duration=time.time() - start_time,
                last_finite_time=report.last_finite_time,
            )
            raise BlowUpError(f"Blow-up detected after t = {report.last_finite_time:g}", report)
        current = candidate
        states.append(current)
        amplitude_times.append(float(times[m]))
        amplitudes.append(amplitude)

    drift = max(abs(current.v.mean - data.v.mean), abs(current.w.mean - data.w.mean))
    operation_logger.log_solver_operation(
        "evolve", success=True, duration=time.time() - start_time, steps=len(times) - 1, mean_drift=drift,
    )
    return Trajectory(times=times, states=states)


def pair_besov_norm(state: StatePair, cfg: SolverConfig, part: Optional[DyadicPartition] = None) -> float:
    """Critical Besov norm ||v|| + ||w|| of a state."""
    idx = cfg.critical_index
    return besov_norm(state.v, idx, part, cfg.measure) + besov_norm(state.w, idx, part, cfg.measure)


def select_local_horizon(
    data: StatePair,
    cfg: SolverConfig,
    eps: float,
    c1: float,
    c2: float,
    part: Optional[DyadicPartition] = None,
    max_halvings: int = 30,
) -> HorizonSelection:
    """
    Frequency cutoff N and horizon T for large data

    N is the smallest shell with C1 ||high_N|| <= eps/2, T solves
    C2 2^{2N/r1} T^{1/r1} ||data|| <= eps/2 (capped at cfg.horizon); T is
    halved until the heat-flow monitor norm on [0, T] is at most eps.

    Args:
        data: Neutral initial state
        cfg: Solver configuration (its horizon is the upper bound for T)
        eps: Smallness target
        c1: Heat-smoothing constant
        c2: Low-frequency constant
        part: Partition
        max_halvings: Cap on certificate-driven halvings

    Returns:
        HorizonSelection: cutoff, horizon and the measured certificate

    Raises:
        HorizonSelectionError: If no cutoff or certified horizon exists
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    start_time = time.time()
    _require_dimension(data, cfg)
    data = _require_neutral(data, cfg)
    grid = data.grid
    j_min, j_max = grid.shell_range
    data_norm = pair_besov_norm(data, cfg, part)
    constants = {"C1": c1, "C2": c2}

    certificate = monitor_norm(heat_flow(data, cfg.time_grid()), cfg, part)
    if certificate <= eps:
        return HorizonSelection(
            cutoff=j_min, horizon=cfg.horizon, eps=eps, certificate_norm=certificate, certified=True,
            data_norm=data_norm, short_circuit=True, constants=constants,
        )

    cutoff = None
    high_norm = 0.0
    for N in range(j_min, j_max + 1):
        high_v, _ = frequency_split(data.v, N)
        high_w, _ = frequency_split(data.w, N)
        high_norm = pair_besov_norm(StatePair(v=high_v, w=high_w), cfg, part)
        if c1 * high_norm <= eps / 2.0:
            cutoff = N
            break
    if cutoff is None:
        raise HorizonSelectionError(
            f"No cutoff in [{j_min}, {j_max}] makes the high-frequency part small enough",
            {"eps": eps, "C1": c1},
        )

    if data_norm > 0 and c2 > 0:
        bound = (eps / (2.0 * c2 * 2.0 ** (2.0 * cutoff / cfg.r1) * data_norm)) ** cfg.r1
        horizon = min(cfg.horizon, bound)
    else:
        horizon = cfg.horizon

    for halvings in range(max_halvings + 1):
        local = cfg.with_horizon(horizon)
        certificate = monitor_norm(heat_flow(data, local.time_grid()), local, part)
        if certificate <= eps:
            operation_logger.log_solver_operation(
                "select_horizon", success=True, duration=time.time() - start_time,
                cutoff=cutoff, horizon=horizon, halvings=halvings,
            )
            return HorizonSelection(
                cutoff=cutoff, horizon=horizon, eps=eps, certificate_norm=certificate, certified=True,
                halvings=halvings, high_norm=high_norm, data_norm=data_norm, constants=constants,
            )
        horizon /= 2.0
    raise HorizonSelectionError(
        f"Heat-flow certificate failed after {max_halvings} halvings",
        {"eps": eps, "last_certificate": certificate},
    )
