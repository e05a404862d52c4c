"""
Periodic torus grid [0, L)^n with M points per dimension.
"""

import math
from functools import lru_cache
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


@lru_cache(maxsize=32)
def _wavenumber_tables(n: int, points: int, length: float) -> Tuple[np.ndarray, ...]:
    """Index axis, wavenumber axis, |k|^2 and |k| for a grid, read-only."""
    index_axis = np.fft.fftfreq(points) * points
    k_axis = (2.0 * np.pi / length) * index_axis
    mesh = np.meshgrid(*([k_axis] * n), indexing="ij", sparse=True)
    k_squared = sum(component**2 for component in mesh)
    k_squared = np.broadcast_to(k_squared, (points,) * n).copy()
    k_magnitude = np.sqrt(k_squared)
    for array in (index_axis, k_axis, k_squared, k_magnitude):
        array.setflags(write=False)
    return index_axis, k_axis, k_squared, k_magnitude


class Grid(BaseModel):
    """Square periodic grid; spectra are stored in FFT ordering."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., ge=2, le=3, description="Spatial dimension")
    points_per_dim: int = Field(..., ge=8, description="Even number of points M per dimension")
    box_length: float = Field(2.0 * math.pi, gt=0, description="Box length L")

    @field_validator("points_per_dim")
    @classmethod
    def validate_even(cls, v: int) -> int:
        if v % 2 != 0:
            raise ValueError("points_per_dim must be even")
        return v

    @field_validator("box_length")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("box_length must be finite")
        return v

    @property
    def key(self) -> Tuple[int, int, float]:
        return (self.n, self.points_per_dim, self.box_length)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_dim,) * self.n

    @property
    def num_points(self) -> int:
        return self.points_per_dim**self.n

    @property
    def spacing(self) -> float:
        return self.box_length / self.points_per_dim

    @property
    def volume(self) -> float:
        return self.box_length**self.n

    @property
    def fundamental(self) -> float:
        """Smallest non-zero wavenumber magnitude 2*pi/L"""
        return 2.0 * math.pi / self.box_length

    @property
    def nyquist(self) -> float:
        """Largest axis wavenumber pi*M/L"""
        return math.pi * self.points_per_dim / self.box_length

    @property
    def index_axis(self) -> np.ndarray:
        return _wavenumber_tables(*self.key)[0]

    @property
    def k_axis(self) -> np.ndarray:
        return _wavenumber_tables(*self.key)[1]

    @property
    def k_squared(self) -> np.ndarray:
        return _wavenumber_tables(*self.key)[2]

    @property
    def k_magnitude(self) -> np.ndarray:
        return _wavenumber_tables(*self.key)[3]

    def wavevector(self) -> Tuple[np.ndarray, ...]:
        """Sparse (broadcastable) wavevector components k_1..k_n."""
        return tuple(np.meshgrid(*([self.k_axis] * self.n), indexing="ij", sparse=True))

    def index_vector(self) -> Tuple[np.ndarray, ...]:
        """Sparse integer mode indices m_1..m_n with k = (2*pi/L) m."""
        return tuple(np.meshgrid(*([self.index_axis] * self.n), indexing="ij", sparse=True))

    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """Sparse physical coordinates x_1..x_n of the grid points."""
        axis = np.arange(self.points_per_dim) * self.spacing
        return tuple(np.meshgrid(*([axis] * self.n), indexing="ij", sparse=True))

    @property
    def shell_range(self) -> Tuple[int, int]:
        """Dyadic shells [j_min, j_max] whose annulus meets a representable |k|."""
        j_min = math.ceil(math.log2(0.75 * self.fundamental)) - 1
        j_max = math.floor(math.log2(8.0 / 3.0 * self.nyquist)) + 1
        return j_min, j_max

    @property
    def shells(self) -> np.ndarray:
        j_min, j_max = self.shell_range
        return np.arange(j_min, j_max + 1)

    def dilated(self, m: int) -> "Grid":
        """Companion grid of box L / 2^m with the same M."""
        return Grid(n=self.n, points_per_dim=self.points_per_dim, box_length=self.box_length / 2.0**m)

    def refined(self, factor: int = 2) -> "Grid":
        """Same box with factor times more points per dimension."""
        return Grid(n=self.n, points_per_dim=self.points_per_dim * factor, box_length=self.box_length)
