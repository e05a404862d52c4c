"""
Report models emitted by norms, audits and solvers.

All reports serialize deterministically; wall-clock fields are excluded
from dumps and written to the sibling metadata file instead.
"""

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from schemas.besov import BesovIndex, Measure


class ShellRow(BaseModel):
    """One dyadic shell of a Besov norm evaluation"""

    j: int
    shell_lp_norm: float = Field(..., ge=0)
    weight_2js: float = Field(..., ge=0)


class BesovReport(BaseModel):
    """Per-shell breakdown of a homogeneous Besov norm"""

    index: BesovIndex
    measure: Measure = Measure.NORMALIZED
    shell_range: Tuple[int, int]
    rows: List[ShellRow]
    norm: float = Field(..., ge=0)
    mean: float = Field(0.0, description="Zero mode, excluded from every block")

    def csv_rows(self) -> List[List[Any]]:
        """Rows `j, shell_lp_norm, weight_2js` followed by a summary row."""
        rows: List[List[Any]] = [[row.j, row.shell_lp_norm, row.weight_2js] for row in self.rows]
        rows.append(["total", self.norm, ""])
        return rows


class AuditRow(BaseModel):
    """Ratio statistics for one audit cell (a shell, or an (r, T) pair)"""

    j: Optional[int] = None
    r: Optional[float] = None
    horizon: Optional[float] = None
    max_ratio: float
    min_ratio: float
    samples: int = Field(..., ge=0)


class AuditReport(BaseModel):
    """Empirical inequality audit with the measured constant"""

    kind: str
    seed: int
    trials: int
    rows: List[AuditRow]
    max_ratio: float
    stable: bool
    tolerance: float
    parameters: Dict[str, Any] = Field(default_factory=dict)
    constants: Dict[str, float] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)


class MinkowskiReport(BaseModel):
    """Ordering between the Chemin-Lerner and L^r(Besov) norms"""

    chemin_lerner: float
    lebesgue_besov: float
    r: float
    q: float
    relation: str = Field(..., description="'cl<=lr', 'lr<=cl' or 'equal'")
    holds: bool
    slack: float


class IterateRecord(BaseModel):
    """One Picard iterate"""

    index: int
    monitor_norm: float
    increment: float
    contraction_ratio: Optional[float] = None
    inside_ball: bool
    wall_time: float = Field(0.0, exclude=True)


class ConvergenceReport(BaseModel):
    """Outcome of the fixed-point driver"""

    converged: bool
    iterations: int
    history: List[IterateRecord]
    heat_flow_norm: float
    ball_radius: float
    ball_ok: bool
    contraction_ratio: Optional[float] = None
    asymptotic_ratio: Optional[float] = None
    tolerance: float
    horizon: float
    dt: float
    constant_c0: Optional[float] = None
    predicted_lipschitz: Optional[float] = None
    regularity_profile: Dict[str, float] = Field(default_factory=dict)
    mild_residual: Optional[float] = None
    continuity_jump: Optional[float] = None

    def timings(self) -> List[float]:
        return [record.wall_time for record in self.history]


class BlowUpReport(BaseModel):
    """Diagnostic for a time integration that left the finite regime"""

    last_finite_time: float
    steps_completed: int
    amplitude_times: List[float]
    amplitudes: List[float]
    estimated_blowup_time: Optional[float] = None
    threshold: float


class HorizonSelection(BaseModel):
    """Frequency cutoff N and local horizon T with a heat-flow certificate"""

    model_config = ConfigDict(frozen=True)

    cutoff: int
    horizon: float = Field(..., gt=0)
    eps: float = Field(..., gt=0)
    certificate_norm: float = Field(..., ge=0)
    certified: bool
    halvings: int = 0
    high_norm: float = 0.0
    data_norm: float = 0.0
    short_circuit: bool = False
    constants: Dict[str, float] = Field(default_factory=dict)
