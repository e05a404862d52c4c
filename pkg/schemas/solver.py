"""
Solver configuration for time stepping and the Picard driver.
"""

import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from schemas.besov import BesovIndex, Measure, validate_theorem_range


class SolverConfig(BaseModel):
    """
    Uniform time grid, Picard controls and the monitor space index

    The monitor space is the Chemin-Lerner space with time exponent r1 and
    Besov index (-2 + n/p + 2/r1, p, q); the bilinear estimate needs
    2/r1 + n/p > 3/2.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    dimension: int = Field(2, ge=2, le=3, description="Spatial dimension n")
    dt: float = Field(1e-3, gt=0, description="Requested time step")
    horizon: float = Field(0.1, gt=0, description="Final time T")
    dealias: bool = Field(True, description="2/3 rule on quadratic products")
    picard_tol: float = Field(1e-10, gt=0, description="Relative increment tolerance")
    picard_max_iter: int = Field(50, ge=1)
    r1: float = Field(3.0, gt=2, description="Chemin-Lerner time exponent of the monitor norm")
    monitor_p: float = Field(2.0, ge=2)
    monitor_q: float = Field(2.0, ge=1)
    measure: Measure = Measure.NORMALIZED
    auto_project: bool = Field(False, description="Project non-neutral data instead of rejecting it")
    blowup_amplitude: float = Field(1e8, gt=0, description="Max |v|, |w| treated as blow-up")

    @field_validator("dt", "horizon", "picard_tol", "r1")
    @classmethod
    def validate_finite(cls, v: float, info) -> float:
        if not math.isfinite(v):
            raise ValueError(f"{info.field_name} must be finite")
        return v

    @model_validator(mode="after")
    def validate_monitor_space(self) -> "SolverConfig":
        validate_theorem_range(self.dimension, self.monitor_p, self.monitor_q)
        if not 2.0 / self.r1 + self.dimension / self.monitor_p > 1.5:
            raise ValueError(
                f"2/r1 + n/p must exceed 3/2, got {2.0 / self.r1 + self.dimension / self.monitor_p:.4f}"
            )
        return self

    @property
    def monitor_index(self) -> BesovIndex:
        return BesovIndex.monitor(self.dimension, self.monitor_p, self.monitor_q, self.r1)

    @property
    def critical_index(self) -> BesovIndex:
        return BesovIndex.critical(self.dimension, self.monitor_p, self.monitor_q)

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.horizon / self.dt - 1e-9)))

    @property
    def step(self) -> float:
        """Effective step T / n_steps (never larger than dt)."""
        return self.horizon / self.n_steps

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def with_horizon(self, horizon: float, min_steps: int = 4) -> "SolverConfig":
        """Copy on [0, horizon] keeping at least min_steps steps."""
        return self.model_copy(update={"horizon": horizon, "dt": min(self.dt, horizon / min_steps)})

    def with_step(self, dt: float) -> "SolverConfig":
        return self.model_copy(update={"dt": dt})
