"""
Trajectories and Chemin-Lerner time-space norms.

A Trajectory holds StatePair snapshots on strictly increasing times
starting at 0, and caches the per-shell L^p norms of each tracked field.
"""

import logging
import math
from typing import TYPE_CHECKING, Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator
from scipy.integrate import trapezoid

from schemas.besov import BesovIndex, FieldSelector, Measure
from schemas.grid import Grid
from schemas.reports import MinkowskiReport
from services.exceptions import EmptyTrajectoryError, GridMismatchError
from services.littlewood_paley import DyadicPartition, build_partition, shell_lp_norms, weighted_shell_sum
from services.spectral_core import SpectralField

if TYPE_CHECKING:
    from services.dh_solver import StatePair

logger = logging.getLogger("besov_dh")

COMPONENTS = ("v", "w")


class Trajectory(BaseModel):
    """Time-stamped sequence of StatePairs on one grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    states: Tuple[Any, ...]

    _shell_cache: Dict[Tuple[str, float, str, int], Tuple[np.ndarray, np.ndarray]] = PrivateAttr(default_factory=dict)

    @field_validator("times", mode="before")
    @classmethod
    def freeze_times(cls, v) -> np.ndarray:
        times = np.array(v, dtype=np.float64).reshape(-1)
        times.setflags(write=False)
        return times

    @field_validator("states", mode="before")
    @classmethod
    def to_tuple(cls, v) -> tuple:
        return tuple(v)

    @model_validator(mode="after")
    def validate_sampling(self) -> "Trajectory":
        if len(self.times) != len(self.states):
            raise ValueError(f"{len(self.times)} times but {len(self.states)} states")
        if len(self.times) == 0:
            return self
        if self.times[0] != 0.0:
            raise ValueError("times must start at 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        grid = self.states[0].grid
        if any(state.grid != grid for state in self.states[1:]):
            raise ValueError("all states must share one grid")
        return self

    @classmethod
    def constant(cls, state: "StatePair", times: Sequence[float]) -> "Trajectory":
        return cls(times=times, states=[state] * len(times))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def grid(self) -> Grid:
        if not self.states:
            raise EmptyTrajectoryError("Trajectory has no samples")
        return self.states[0].grid

    @property
    def horizon(self) -> float:
        if len(self.times) == 0:
            raise EmptyTrajectoryError("Trajectory has no samples")
        return float(self.times[-1])

    @property
    def final(self) -> "StatePair":
        if not self.states:
            raise EmptyTrajectoryError("Trajectory has no samples")
        return self.states[-1]

    def field_series(self, component: str) -> List[SpectralField]:
        return [getattr(state, component) for state in self.states]

    def require_same_sampling(self, other: "Trajectory") -> None:
        if len(self) != len(other) or not np.allclose(self.times, other.times, rtol=1e-12, atol=0):
            raise GridMismatchError("Trajectories are sampled on different time grids")
        if len(self) and self.grid != other.grid:
            raise GridMismatchError("Trajectories live on different spatial grids")

    def map_states(self, fn: Callable[["StatePair"], "StatePair"]) -> "Trajectory":
        return Trajectory(times=self.times, states=[fn(state) for state in self.states])

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self.require_same_sampling(other)
        return Trajectory(times=self.times, states=[a + b for a, b in zip(self.states, other.states)])

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self.require_same_sampling(other)
        return Trajectory(times=self.times, states=[a - b for a, b in zip(self.states, other.states)])

    def scaled(self, alpha: float) -> "Trajectory":
        return self.map_states(lambda state: state * alpha)

    def prefix(self, count: int) -> "Trajectory":
        """First count samples, i.e. the trajectory on [0, times[count-1]]."""
        return Trajectory(times=self.times[:count], states=self.states[:count])

    def subsampled(self, stride: int) -> "Trajectory":
        """Every stride-th sample; the final time must stay on the subsampled grid."""
        if (len(self) - 1) % stride != 0:
            raise ValueError(f"{len(self) - 1} intervals are not divisible by {stride}")
        return Trajectory(times=self.times[::stride], states=self.states[::stride])

    def shell_norm_table(
        self,
        component: str,
        p: float,
        part: Optional[DyadicPartition] = None,
        measure: Measure = Measure.NORMALIZED,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Cached ||Delta_j f(t_i)||_{L^p}

        Returns:
            Tuple[np.ndarray, np.ndarray]: shells and a table of shape (shells, times)
        """
        if not self.states:
            raise EmptyTrajectoryError("Trajectory has no samples")
        part = part if part is not None else build_partition()
        key = (component, float(p), Measure(measure).value, hash(part))
        if key not in self._shell_cache:
            columns = [shell_lp_norms(field, p, part, measure) for field in self.field_series(component)]
            shells = columns[0][0]
            table = np.stack([norms for _, norms in columns], axis=1)
            table.setflags(write=False)
            self._shell_cache[key] = (shells, table)
        return self._shell_cache[key]

    def cached_tables(self) -> Dict[Tuple[str, float, str, int], Tuple[np.ndarray, np.ndarray]]:
        return dict(self._shell_cache)


def _check_time_exponent(r: float) -> None:
    if not r > 1:
        raise ValueError(f"Time exponent r must lie in (1, inf], got {r}")


def time_lr_norm(values: np.ndarray, times: np.ndarray, r: float) -> np.ndarray:
    """
    L^r(0, T) norm along the last axis by composite trapezoid; r = inf is the max.
    """
    values = np.asarray(values, dtype=np.float64)
    if math.isinf(r):
        return np.max(values, axis=-1)
    if len(times) < 2:
        return np.zeros(values.shape[:-1]) if values.ndim > 1 else np.float64(0.0)
    return trapezoid(values**r, times, axis=-1) ** (1.0 / r)


def _components(field: FieldSelector) -> Iterable[str]:
    field = FieldSelector(field)
    return COMPONENTS if field is FieldSelector.PAIR else (field.value,)


def chemin_lerner_norm(
    traj: Trajectory,
    field: FieldSelector,
    r: float,
    idx: BesovIndex,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> float:
    """
    Norm of L^r(0,T; Besov) with the time integral taken inside the shell sum

    Args:
        traj: Trajectory
        field: v, w or pair (pair = sum of the two norms)
        r: Time exponent in (1, inf]
        idx: Besov index
        part: Partition (default if None)
        measure: Spatial measure

    Returns:
        float: (sum_j 2^{jsq} ||Delta_j f||^q_{L^r L^p})^{1/q}

    Raises:
        EmptyTrajectoryError: If traj has no samples
    """
    _check_time_exponent(r)
    if len(traj) == 0:
        raise EmptyTrajectoryError("Chemin-Lerner norm of an empty trajectory")
    total = 0.0
    for component in _components(field):
        shells, table = traj.shell_norm_table(component, idx.p, part, measure)
        in_time = time_lr_norm(table, traj.times, r)
        total += weighted_shell_sum(shells, in_time, idx.s, idx.q)
    return float(total)


def besov_series(
    traj: Trajectory,
    field: FieldSelector,
    idx: BesovIndex,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> np.ndarray:
    """Besov norm at every sample time."""
    if len(traj) == 0:
        raise EmptyTrajectoryError("Besov series of an empty trajectory")
    series = np.zeros(len(traj))
    for component in _components(field):
        shells, table = traj.shell_norm_table(component, idx.p, part, measure)
        terms = np.exp2(shells * idx.s)[:, None] * table
        if math.isinf(idx.q):
            series += np.max(terms, axis=0)
        else:
            series += np.sum(terms**idx.q, axis=0) ** (1.0 / idx.q)
    return series


def lr_besov_norm(
    traj: Trajectory,
    field: FieldSelector,
    r: float,
    idx: BesovIndex,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> float:
    """Norm of L^r(0,T; Besov) with the shell sum inside the time integral."""
    _check_time_exponent(r)
    if len(traj) == 0:
        raise EmptyTrajectoryError("L^r Besov norm of an empty trajectory")
    total = 0.0
    for component in _components(field):
        total += float(time_lr_norm(besov_series(traj, component, idx, part, measure), traj.times, r))
    return total


def minkowski_ordering_audit(
    traj: Trajectory,
    field: FieldSelector,
    r: float,
    idx: BesovIndex,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
    slack: float = 1e-10,
) -> MinkowskiReport:
    """
    Check the ordering of the two time-space norms

    r <= q gives chemin_lerner <= lr_besov, q <= r the reverse, and
    equality for q = r.
    """
    cl = chemin_lerner_norm(traj, field, r, idx, part, measure)
    lr = lr_besov_norm(traj, field, r, idx, part, measure)
    scale = max(cl, lr, np.finfo(float).tiny)
    if r == idx.q:
        relation = "equal"
        holds = abs(cl - lr) <= slack * scale
    elif r < idx.q:
        relation = "cl<=lr"
        holds = cl <= lr + slack * scale
    else:
        relation = "lr<=cl"
        holds = lr <= cl + slack * scale
    return MinkowskiReport(
        chemin_lerner=cl, lebesgue_besov=lr, r=r, q=idx.q, relation=relation, holds=bool(holds), slack=slack
    )


def continuity_jump(
    traj: Trajectory,
    idx: BesovIndex,
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> float:
    """Largest sample-to-sample change of the pair Besov norm."""
    series = besov_series(traj, FieldSelector.PAIR, idx, part, measure)
    return float(np.max(np.abs(np.diff(series)))) if len(series) > 1 else 0.0


def regularity_profile(
    traj: Trajectory,
    n: int,
    p: float,
    q: float,
    r_values: Sequence[float],
    part: Optional[DyadicPartition] = None,
    measure: Measure = Measure.NORMALIZED,
) -> Dict[str, float]:
    """Pair norms in L^r(0,T; B^{-2+n/p+2/r}_{p,q}) keyed by r."""
    profile = {}
    for r in r_values:
        s = -2.0 + n / p + (0.0 if math.isinf(r) else 2.0 / r)
        idx = BesovIndex(s=s, p=p, q=q)
        profile[_r_key(r)] = chemin_lerner_norm(traj, FieldSelector.PAIR, r, idx, part, measure)
    return profile


def _r_key(r: float) -> str:
    return "inf" if math.isinf(r) else f"{r:g}"
