"""
Experiment specifications and verdicts.
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from schemas.grid import Grid
from schemas.solver import SolverConfig


class ExperimentKind(str, Enum):
    SELF_SIMILAR = "self_similar"
    EQUIVARIANCE = "equivariance"
    STABILITY = "stability"
    THRESHOLD_SWEEP = "threshold_sweep"
    PRODUCT_AUDIT = "product_audit"
    HEAT_AUDIT = "heat_audit"
    BERNSTEIN_AUDIT = "bernstein_audit"


class SolutionMethod(str, Enum):
    EVOLVE = "evolve"
    PICARD = "picard"


class SelfSimilarProfile(str, Enum):
    QUADRUPOLE = "quadrupole"
    HEAT_KERNEL = "heat_kernel"


class ExperimentSpec(BaseModel):
    """
    Complete, validated description of one experiment run

    Grid fields describe the primary grid; solver holds the time grid and
    monitor space. Kind-specific fields are ignored by other kinds.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ExperimentKind
    seed: int = Field(0, ge=0)
    n: int = Field(2, ge=2, le=3)
    points_per_dim: int = Field(64, ge=8)
    box_length: float = Field(2.0 * math.pi, gt=0)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    amplitude: float = Field(
        1e-3, ge=0,
        description="Critical Besov norm of random data; raw multiplier of the self-similar profiles",
    )
    trials: int = Field(20, ge=1)
    tolerance: Optional[float] = Field(None, gt=0, description="Pass threshold, kind default when unset")
    method: SolutionMethod = SolutionMethod.EVOLVE

    # stability
    perturbations: List[float] = Field(default_factory=lambda: [1e-3, 1e-4, 1e-5, 1e-6])
    r_values: List[float] = Field(default_factory=lambda: [2.0, 4.0, math.inf])

    # threshold_sweep
    amplitude_low: float = Field(1e-3, gt=0)
    amplitude_high: float = Field(1e2, gt=0)
    bisection_steps: int = Field(8, ge=1)
    monotonicity_samples: int = Field(6, ge=2)
    long_horizon_factor: float = Field(50.0, gt=0)
    sweep_steps: int = Field(64, ge=2)

    # self_similar
    profile: SelfSimilarProfile = SelfSimilarProfile.QUADRUPOLE
    inner_cells: float = Field(4.0, gt=0)
    outer_fraction: float = Field(0.25, gt=0, le=0.3)
    base_time: Optional[float] = Field(None, gt=0)
    time_doublings: int = Field(3, ge=1)
    window: float = Field(1.0, gt=0, description="Half-width of the similarity-variable window")
    window_points: int = Field(16, ge=2)

    # audits
    s: float = Field(1.0, ge=0)
    p: float = Field(2.0, ge=1)
    q: float = Field(2.0, ge=1)
    shells: List[int] = Field(default_factory=lambda: [1, 2, 3, 4])
    horizons: List[float] = Field(default_factory=lambda: [0.1, 1.0, 10.0])
    audit_horizon: Optional[float] = Field(None, gt=0)

    constants: Dict[str, float] = Field(default_factory=dict, description="Supplied C0, C1, C2")

    @field_validator("perturbations", "horizons")
    @classmethod
    def validate_positive(cls, v: List[float]) -> List[float]:
        if any(not (x > 0 and math.isfinite(x)) for x in v):
            raise ValueError("values must be positive and finite")
        return v

    @field_validator("r_values")
    @classmethod
    def validate_time_exponents(cls, v: List[float]) -> List[float]:
        if any(not r > 1 for r in v):
            raise ValueError("time exponents must exceed 1")
        return v

    @field_validator("constants")
    @classmethod
    def validate_constants(cls, v: Dict[str, float]) -> Dict[str, float]:
        unknown = set(v) - {"C0", "C1", "C2", "product_max", "bernstein_max"}
        if unknown:
            raise ValueError(f"unknown constants: {sorted(unknown)}")
        if any(not (x > 0 and math.isfinite(x)) for x in v.values()):
            raise ValueError("constants must be positive and finite")
        return v

    @model_validator(mode="after")
    def validate_kind_parameters(self) -> "ExperimentSpec":
        Grid(n=self.n, points_per_dim=self.points_per_dim, box_length=self.box_length)
        if self.solver.dimension != self.n:
            raise ValueError(f"solver.dimension {self.solver.dimension} does not match n={self.n}")
        kind = self.kind
        if kind is ExperimentKind.STABILITY and not self.perturbations:
            raise ValueError("stability needs at least one perturbation magnitude")
        if kind is ExperimentKind.STABILITY and not self.r_values:
            raise ValueError("stability needs at least one time exponent")
        if kind is ExperimentKind.THRESHOLD_SWEEP and not self.amplitude_low < self.amplitude_high:
            raise ValueError("threshold_sweep needs amplitude_low < amplitude_high")
        if kind is ExperimentKind.SELF_SIMILAR:
            if self.n != 2:
                raise ValueError("self_similar profiles are defined for n = 2")
            sigma = (self.inner_cells * self.box_length / self.points_per_dim) ** 2
            if self.base_time is not None and self.base_time < sigma:
                raise ValueError(
                    f"base_time must be at least the smoothing time (inner_cells * spacing)^2 = {sigma:.3e}"
                )
        if kind is ExperimentKind.BERNSTEIN_AUDIT:
            if self.p > self.q:
                raise ValueError("bernstein_audit needs p <= q")
            if not self.shells:
                raise ValueError("bernstein_audit needs at least one shell")
        if kind is ExperimentKind.HEAT_AUDIT and not self.horizons:
            raise ValueError("heat_audit needs at least one horizon")
        return self

    @property
    def grid(self) -> Grid:
        return Grid(n=self.n, points_per_dim=self.points_per_dim, box_length=self.box_length)

    def resolved_tolerance(self) -> float:
        defaults = {
            ExperimentKind.SELF_SIMILAR: 0.05,
            ExperimentKind.EQUIVARIANCE: 1e-6,
            ExperimentKind.STABILITY: 2.0,
            ExperimentKind.THRESHOLD_SWEEP: 1.0,
            ExperimentKind.PRODUCT_AUDIT: 1e6,
            ExperimentKind.HEAT_AUDIT: 0.3,
            ExperimentKind.BERNSTEIN_AUDIT: 0.2,
        }
        return self.tolerance if self.tolerance is not None else defaults[self.kind]


class ExperimentVerdict(BaseModel):
    """Machine-readable outcome; series go to CSV and are excluded from the JSON"""

    spec: Dict[str, Any]
    constants: Dict[str, float] = Field(default_factory=dict)
    metrics: Dict[str, Any] = Field(default_factory=dict)
    passed: bool
    notes: List[str] = Field(default_factory=list)
    series: Dict[str, List[float]] = Field(default_factory=dict, exclude=True)
