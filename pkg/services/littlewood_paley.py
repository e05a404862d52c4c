"""
Littlewood-Paley blocks and homogeneous Besov norms on the torus.

Shells are measured in raw wavenumber |k|; the zero mode belongs to no
block and is reported separately.
"""

import logging
import math
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, Field, model_validator

from schemas.besov import BesovIndex, Measure
from schemas.grid import Grid
from schemas.reports import AuditReport, AuditRow, BesovReport, ShellRow
from services.exceptions import ExponentOrderError
from services.spectral_core import (
    SpectralField,
    fractional_derivative,
    random_band_limited,
)

logger = logging.getLogger("besov_dh")


def _exp_tail(t: np.ndarray) -> np.ndarray:
    """e^{-1/t} for t > 0, 0 otherwise."""
    positive = t > 0
    safe = np.where(positive, t, 1.0)
    return np.where(positive, np.exp(-1.0 / safe), 0.0)


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    rising = _exp_tail(t)
    falling = _exp_tail(1.0 - t)
    return rising / (rising + falling)


class DyadicPartition(BaseModel):
    """
    Smooth radial partition of unity

    chi equals 1 on |xi| <= inner_radius and 0 on |xi| >= outer_radius.
    phi is the normalized difference chi(xi/2) - chi(xi), supported in
    [3/4, 8/3] for the default radii, and psi = 1 - sum_{j>=0} phi(2^-j xi).
    """

    model_config = ConfigDict(frozen=True)

    inner_radius: float = Field(1.0, gt=0)
    outer_radius: float = Field(4.0 / 3.0, gt=0)

    @model_validator(mode="after")
    def validate_radii(self) -> "DyadicPartition":
        if not self.inner_radius < self.outer_radius <= 2.0 * self.inner_radius:
            raise ValueError("radii must satisfy inner < outer <= 2 * inner")
        return self

    @property
    def annulus(self) -> Tuple[float, float]:
        """Support of phi."""
        return 0.75 * self.inner_radius, 2.0 * self.outer_radius

    def chi(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=np.float64))
        width = self.outer_radius - self.inner_radius
        return 1.0 - _smooth_step((r - self.inner_radius) / width)

    def phi_raw(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=np.float64))
        return self.chi(r / 2.0) - self.chi(r)

    def shell_sum(self, r) -> np.ndarray:
        """sum_j phi_raw(2^-j r) over the few shells that can touch r."""
        r = np.abs(np.asarray(r, dtype=np.float64))
        positive = r > 0
        base = np.floor(np.log2(np.where(positive, r, 1.0)))
        total = np.zeros_like(r)
        for offset in range(-2, 2):
            total = total + self.phi_raw(r * np.exp2(-(base + offset)))
        return np.where(positive, total, 0.0)

    def phi(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=np.float64))
        raw = self.phi_raw(r)
        denominator = self.shell_sum(r)
        safe = np.where(denominator > 0, denominator, 1.0)
        return np.where(denominator > 0, raw / safe, 0.0)

    def psi(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=np.float64))
        largest = float(np.max(r)) if r.size else 0.0
        top = max(int(math.ceil(math.log2(largest))) + 1, 0) if largest > 0 else 0
        total = np.zeros_like(r)
        for j in range(0, top + 1):
            total = total + self.phi(r * 2.0**-j)
        return 1.0 - total


@lru_cache(maxsize=1)
def build_partition() -> DyadicPartition:
    """The default partition (chi plateau radius 1, cutoff 4/3)."""
    return DyadicPartition()


def _resolve(part: Optional[DyadicPartition]) -> DyadicPartition:
    return part if part is not None else build_partition()


@lru_cache(maxsize=512)
def _shell_symbol(part: DyadicPartition, key: Tuple[int, int, float], j: int) -> np.ndarray:
    grid = Grid(n=key[0], points_per_dim=key[1], box_length=key[2])
    symbol = part.phi(grid.k_magnitude * 2.0**-j)
    symbol.setflags(write=False)
    return symbol


@lru_cache(maxsize=512)
def _low_symbol(part: DyadicPartition, key: Tuple[int, int, float], j: int) -> np.ndarray:
    grid = Grid(n=key[0], points_per_dim=key[1], box_length=key[2])
    symbol = part.psi(grid.k_magnitude * 2.0**-j)
    symbol.setflags(write=False)
    return symbol


def shell_symbol(grid: Grid, j: int, part: Optional[DyadicPartition] = None) -> np.ndarray:
    """Multiplier phi(2^-j |k|) of block j on this grid (zero at k = 0)."""
    return _shell_symbol(_resolve(part), grid.key, int(j))


def dyadic_block(f: SpectralField, j: int, part: Optional[DyadicPartition] = None) -> SpectralField:
    """Delta_j f; shells outside the grid's range give the zero field."""
    j_min, j_max = f.grid.shell_range
    if not j_min <= j <= j_max:
        return SpectralField.zeros(f.grid)
    return f.with_coeffs(shell_symbol(f.grid, j, part) * f.coeffs)


def dyadic_blocks(f: SpectralField, part: Optional[DyadicPartition] = None) -> Dict[int, SpectralField]:
    """All representable blocks of f keyed by shell index."""
    return {int(j): dyadic_block(f, int(j), part) for j in f.grid.shells}


def low_pass(f: SpectralField, j: int, part: Optional[DyadicPartition] = None) -> SpectralField:
    """S_j f = mean(f) + sum_{k <= j-1} Delta_k f, multiplier psi(2^-j |k|)."""
    symbol = _low_symbol(_resolve(part), f.grid.key, int(j))
    return f.with_coeffs(symbol * f.coeffs)


def _lp_of_values(values: np.ndarray, p: float, axes: Tuple[int, ...]) -> np.ndarray:
    magnitude = np.abs(values)
    if math.isinf(p):
        return np.max(magnitude, axis=axes)
    if p == 2:
        return np.sqrt(np.mean(magnitude**2, axis=axes))
    return np.mean(magnitude**p, axis=axes) ** (1.0 / p)


def measure_factor(grid: Grid, p: float, measure: Measure) -> float:
    """Conversion from the normalized to the requested measure, L^{n/p} for Lebesgue."""
    if Measure(measure) is Measure.LEBESGUE and not math.isinf(p):
        return grid.volume ** (1.0 / p)
    return 1.0


def lp_norm(f: SpectralField, p: float, measure: Measure = Measure.NORMALIZED) -> float:
    """
    Discrete L^p norm of a field over the grid points

    Args:
        f: Field
        p: Integrability in [1, inf]
        measure: normalized (box of unit mass) or lebesgue

    Returns:
        float: (mean |f|^p)^{1/p} times L^{n/p} for the Lebesgue measure
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    axes = tuple(range(f.grid.n))
    return float(_lp_of_values(f.values, p, axes)) * measure_factor(f.grid, p, measure)


def shell_lp_norms(
    f: SpectralField,
    p: float,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    ||Delta_j f||_{L^p} for every representable shell, in one batched transform

    Returns:
        Tuple[np.ndarray, np.ndarray]: shell indices and norms
    """
    grid = f.grid
    shells = grid.shells
    part = _resolve(part)
    stack = np.stack([_shell_symbol(part, grid.key, int(j)) for j in shells]) * f.coeffs
    spatial_axes = tuple(range(1, grid.n + 1))
    values = np.real(scipy.fft.ifftn(stack, axes=spatial_axes)) * grid.num_points
    norms = _lp_of_values(values, p, spatial_axes) * measure_factor(grid, p, measure)
    return shells, norms


def weighted_shell_sum(shells: np.ndarray, norms: np.ndarray, s: float, q: float) -> float:
    """l^q sum of 2^{js} a_j (sup for q = inf)."""
    if len(shells) == 0:
        return 0.0
    terms = np.exp2(np.asarray(shells, dtype=np.float64) * s) * np.asarray(norms)
    if math.isinf(q):
        return float(np.max(terms))
    return float(np.sum(terms**q) ** (1.0 / q))


def besov_norm(
    f: SpectralField,
    idx: BesovIndex,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> float:
    """Truncated homogeneous Besov norm over the grid's representable shells."""
    shells, norms = shell_lp_norms(f, idx.p, part, measure)
    return weighted_shell_sum(shells, norms, idx.s, idx.q)


def besov_report(
    f: SpectralField,
    idx: BesovIndex,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> BesovReport:
    """Besov norm with its per-shell breakdown and truncation range."""
    shells, norms = shell_lp_norms(f, idx.p, part, measure)
    rows = [
        ShellRow(j=int(j), shell_lp_norm=float(a), weight_2js=float(2.0 ** (j * idx.s)))
        for j, a in zip(shells, norms)
    ]
    return BesovReport(
        index=idx,
        measure=measure,
        shell_range=f.grid.shell_range,
        rows=rows,
        norm=weighted_shell_sum(shells, norms, idx.s, idx.q),
        mean=f.mean,
    )


def frequency_split(f: SpectralField, N: int) -> Tuple[SpectralField, SpectralField]:
    """
    Split f into (high, low) with high supported on |k| > 2^N

    The mean stays in the low part and high + low reproduces f exactly.
    """
    high_mask = f.grid.k_magnitude > 2.0**N
    high = f.with_coeffs(np.where(high_mask, f.coeffs, 0.0))
    low = f.with_coeffs(np.where(high_mask, 0.0, f.coeffs))
    return high, low


def _kernel_trial(grid: Grid, part: DyadicPartition, j: int, rng: np.random.Generator) -> SpectralField:
    """Smooth concentrated kernel with support |k| <= 2^j, translated by a grid vector."""
    shift = rng.integers(0, grid.points_per_dim, size=grid.n) * grid.spacing
    amplitude = part.chi(grid.k_magnitude * part.outer_radius * 2.0**-j)
    phase = sum(k * x0 for k, x0 in zip(grid.wavevector(), shift))
    return SpectralField(grid=grid, coeffs=amplitude * np.exp(-1j * phase))


def _band_trial(grid: Grid, j: int, rng: np.random.Generator) -> SpectralField:
    """Random-phase field band-limited to |k| <= 2^j."""
    max_index = int(math.floor(2.0**j / grid.fundamental))
    field = random_band_limited(grid, rng, max_index, zero_mean=False)
    return field.with_coeffs(np.where(grid.k_magnitude <= 2.0**j, field.coeffs, 0.0))


def bernstein_audit(
    part: Optional[DyadicPartition],
    grid: Grid,
    s: float,
    p: float,
    q: float,
    trials: int,
    seed: int = 0,
    shells: Sequence[int] = (1, 2, 3, 4),
    tolerance: float = 0.2,
) -> AuditReport:
    """
    Empirical constant of ||D^s f||_q <= C 2^{js + jn(1/p - 1/q)} ||f||_p

    Each trial draws a random band-limited field and a translated smooth
    kernel (the extremal family) for every shell j; norms use the
    Lebesgue measure.

    Args:
        part: Partition supplying the kernel profile (default partition if None)
        grid: Grid; 2^j must stay below its Nyquist wavenumber
        s: Derivative order, s >= 0
        p: Integrability of the input, p <= q
        q: Integrability of the output
        trials: Draws per shell
        seed: Random seed
        shells: Shell indices j
        tolerance: Relative spread of per-shell maxima counted as stable

    Returns:
        AuditReport: Per-shell ratios, overall max and stability flag

    Raises:
        ExponentOrderError: If p > q
    """
    if p > q:
        raise ExponentOrderError(f"Bernstein audit requires p <= q, got p={p}, q={q}", {"p": p, "q": q})
    if s < 0:
        raise ValueError(f"s must be non-negative, got {s}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    part = _resolve(part)
    rng = np.random.default_rng(seed)
    inverse_q = 0.0 if math.isinf(q) else 1.0 / q
    inverse_p = 0.0 if math.isinf(p) else 1.0 / p

    rows = []
    notes = []
    for j in shells:
        if 2.0**j >= grid.nyquist or 2.0**j < grid.fundamental:
            notes.append(f"shell {j} not representable on this grid; skipped")
            continue
        scale = 2.0 ** (j * s + j * grid.n * (inverse_p - inverse_q))
        ratios = []
        for _ in range(trials):
            for trial in (_band_trial(grid, j, rng), _kernel_trial(grid, part, j, rng)):
                denominator = scale * lp_norm(trial, p, Measure.LEBESGUE)
                if denominator == 0:
                    continue
                numerator = lp_norm(fractional_derivative(trial, s), q, Measure.LEBESGUE)
                ratios.append(numerator / denominator)
        rows.append(AuditRow(j=j, max_ratio=max(ratios), min_ratio=min(ratios), samples=len(ratios)))

    maxima = [row.max_ratio for row in rows]
    overall = max(maxima) if maxima else 0.0
    spread = (overall - min(maxima)) / overall if overall > 0 else 0.0
    report = AuditReport(
        kind="bernstein",
        seed=seed,
        trials=trials,
        rows=rows,
        max_ratio=overall,
        stable=bool(maxima) and spread <= tolerance,
        tolerance=tolerance,
        parameters={
            "s": s, "p": p, "q": q, "n": grid.n,
            "points_per_dim": grid.points_per_dim, "box_length": grid.box_length,
        },
        constants={"bernstein_max": overall},
        notes=notes,
    )
    logger.debug(f"Bernstein audit s={s} p={p} q={q}: max ratio {overall:.4g}, spread {spread:.3f}")
    return report
