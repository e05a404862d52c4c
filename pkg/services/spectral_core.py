"""
Pseudospectral plumbing on the periodic torus [0, L)^n.

Fields are stored as full complex spectra in FFT ordering. The forward
transform carries the 1/M^n factor so coeff(0) is the spatial mean.
"""

import logging
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator

from schemas.grid import Grid
from services.exceptions import (
    GridMismatchError,
    InvalidMultiplierError,
    NegativeTimeError,
    ShapeMismatchError,
)

logger = logging.getLogger("besov_dh")

Multiplier = Union[np.ndarray, Callable[..., np.ndarray]]


class SpectralField(BaseModel):
    """Fourier coefficients of a real scalar field on a Grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid
    coeffs: np.ndarray

    _values: Optional[np.ndarray] = PrivateAttr(default=None)

    @field_validator("coeffs", mode="before")
    @classmethod
    def freeze_coeffs(cls, v) -> np.ndarray:
        array = np.asarray(v, dtype=np.complex128)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def validate_shape(self) -> "SpectralField":
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coeffs shape {self.coeffs.shape} does not match grid shape {self.grid.shape}")
        return self

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid=grid, coeffs=np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_values(cls, values: np.ndarray, grid: Grid) -> "SpectralField":
        return forward_transform(values, grid)

    @property
    def values(self) -> np.ndarray:
        """Physical-space values (computed once, read-only)."""
        if self._values is None:
            values = inverse_transform(self)
            values.setflags(write=False)
            self._values = values
        return self._values

    @property
    def mean(self) -> float:
        return float(self.coeffs[(0,) * self.grid.n].real)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(grid=self.grid, coeffs=coeffs)

    def with_mean(self, mean: float) -> "SpectralField":
        coeffs = self.coeffs.copy()
        coeffs[(0,) * self.grid.n] = mean
        return self.with_coeffs(coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if not isinstance(other, SpectralField):
            return NotImplemented
        require_same_grid(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if not isinstance(other, SpectralField):
            return NotImplemented
        require_same_grid(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "SpectralField":
        return self.with_coeffs(self.coeffs / scalar)

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def require_same_grid(*fields: SpectralField) -> Grid:
    """Return the common grid or raise GridMismatchError."""
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridMismatchError(
                "Fields live on different grids",
                {"expected": grid.model_dump(), "got": other.grid.model_dump()},
            )
    return grid


def forward_transform(field_values: np.ndarray, grid: Grid) -> SpectralField:
    """
    Transform physical values to normalized Fourier coefficients

    Args:
        field_values: Real array of shape grid.shape
        grid: Target grid

    Returns:
        SpectralField: coeff(k) = M^{-n} sum_x f(x) e^{-ik.x}

    Raises:
        ShapeMismatchError: If the array shape does not match the grid
    """
    values = np.asarray(field_values)
    if values.shape != grid.shape:
        raise ShapeMismatchError(
            f"Array shape {values.shape} does not match grid shape {grid.shape}",
            {"expected": list(grid.shape), "got": list(values.shape)},
        )
    if np.iscomplexobj(values):
        values = values.real
    coeffs = scipy.fft.fftn(values.astype(np.float64)) / grid.num_points
    return SpectralField(grid=grid, coeffs=coeffs)


def inverse_transform(field: SpectralField) -> np.ndarray:
    """Physical values of a field (real part of the synthesis sum)."""
    return np.real(scipy.fft.ifftn(field.coeffs) * field.grid.num_points)


def apply_multiplier(f: SpectralField, m: Multiplier) -> SpectralField:
    """
    Apply a Fourier multiplier coeff_out(k) = m(k) coeff_in(k)

    Args:
        f: Input field
        m: Array broadcastable to the grid, or a callable taking the
           wavevector components (k_1, ..., k_n) and returning such an array

    Returns:
        SpectralField: Multiplied field

    Raises:
        InvalidMultiplierError: If m is non-finite at some k != 0
    """
    grid = f.grid
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        symbol = m(*grid.wavevector()) if callable(m) else m
        symbol = np.broadcast_to(np.asarray(symbol), grid.shape)
    finite = np.isfinite(symbol)
    zero = (0,) * grid.n
    if not finite.all():
        bad = ~finite
        bad[zero] = False
        if bad.any():
            raise InvalidMultiplierError(
                "Multiplier is not finite at a non-zero wavenumber",
                {"bad_modes": int(bad.sum())},
            )
        symbol = np.where(finite, symbol, 0.0)
    return f.with_coeffs(symbol * f.coeffs)


def heat_symbol(grid: Grid, t: float) -> np.ndarray:
    if t < 0:
        raise NegativeTimeError(f"Heat propagator requires t >= 0, got {t}", {"t": t})
    return np.exp(-grid.k_squared * t)


def heat_propagator(f: SpectralField, t: float) -> SpectralField:
    """e^{t Delta} f; raises NegativeTimeError for t < 0."""
    return f.with_coeffs(heat_symbol(f.grid, t) * f.coeffs)


@lru_cache(maxsize=32)
def _odd_axis(key: Tuple[int, int, float]) -> np.ndarray:
    grid = Grid(n=key[0], points_per_dim=key[1], box_length=key[2])
    axis = grid.k_axis.copy()
    axis[grid.points_per_dim // 2] = 0.0
    axis.setflags(write=False)
    return axis


def odd_wavevector(grid: Grid) -> Tuple[np.ndarray, ...]:
    """Wavevector components with the Nyquist planes zeroed, for odd-order symbols."""
    axis = _odd_axis(grid.key)
    return tuple(np.meshgrid(*([axis] * grid.n), indexing="ij", sparse=True))


@lru_cache(maxsize=32)
def _inverse_k_squared(key: Tuple[int, int, float]) -> np.ndarray:
    grid = Grid(n=key[0], points_per_dim=key[1], box_length=key[2])
    k_squared = grid.k_squared
    inverse = np.zeros_like(k_squared)
    np.divide(1.0, k_squared, out=inverse, where=k_squared > 0)
    inverse.setflags(write=False)
    return inverse


def gradient(f: SpectralField) -> Tuple[SpectralField, ...]:
    return tuple(f.with_coeffs(1j * k * f.coeffs) for k in odd_wavevector(f.grid))


def divergence(components: Sequence[SpectralField]) -> SpectralField:
    grid = require_same_grid(*components)
    if len(components) != grid.n:
        raise ShapeMismatchError(f"Expected {grid.n} components, got {len(components)}")
    total = sum(1j * k * c.coeffs for k, c in zip(odd_wavevector(grid), components))
    return components[0].with_coeffs(total)


def laplacian(f: SpectralField) -> SpectralField:
    return f.with_coeffs(-f.grid.k_squared * f.coeffs)


def inverse_laplacian(f: SpectralField) -> SpectralField:
    """(-Delta)^{-1} f with the zero mode set to 0."""
    return f.with_coeffs(_inverse_k_squared(f.grid.key) * f.coeffs)


def inverse_laplacian_gradient(f: SpectralField) -> Tuple[SpectralField, ...]:
    """
    Components i k_l / |k|^2 coeff(k) of grad (-Delta)^{-1} f

    The zero mode maps to 0 and the Nyquist planes are dropped so each
    component stays real.
    """
    scaled = _inverse_k_squared(f.grid.key) * f.coeffs
    return tuple(f.with_coeffs(1j * k * scaled) for k in odd_wavevector(f.grid))


def fractional_derivative(f: SpectralField, s: float) -> SpectralField:
    """|D|^s f; s = 0 is the identity and the zero mode is dropped otherwise."""
    if s == 0:
        return f
    k_magnitude = f.grid.k_magnitude
    symbol = np.zeros_like(k_magnitude)
    np.power(k_magnitude, s, out=symbol, where=k_magnitude > 0)
    return f.with_coeffs(symbol * f.coeffs)


@lru_cache(maxsize=32)
def _dealias_mask(key: Tuple[int, int, float]) -> np.ndarray:
    n, points, _ = key
    index_axis = np.fft.fftfreq(points) * points
    keep_axis = 3 * np.abs(index_axis) < points
    mask = np.ones((points,) * n, dtype=bool)
    for axis in range(n):
        shape = [1] * n
        shape[axis] = points
        mask &= keep_axis.reshape(shape)
    mask.setflags(write=False)
    return mask


def dealias_mask(grid: Grid) -> np.ndarray:
    """Modes kept by the 2/3 rule: 3|m_l| < M on every axis."""
    return _dealias_mask(grid.key)


def dealias(f: SpectralField) -> SpectralField:
    return f.with_coeffs(np.where(dealias_mask(f.grid), f.coeffs, 0.0))


def product(f: SpectralField, g: SpectralField, dealiased: bool = True) -> SpectralField:
    """Pointwise product computed in physical space, 2/3-truncated by default."""
    require_same_grid(f, g)
    if dealiased:
        f, g = dealias(f), dealias(g)
    out = forward_transform(f.values * g.values, f.grid)
    return dealias(out) if dealiased else out


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """Spatial mean of f g, evaluated by Parseval."""
    require_same_grid(f, g)
    return float(np.real(np.sum(f.coeffs * np.conj(g.coeffs))))


def resample(f: SpectralField, grid: Grid) -> SpectralField:
    """
    Move a field to a grid of the same box with a different M

    Modes strictly below both Nyquist indices are carried over, the rest
    are dropped (restriction) or zero (padding).
    """
    source = f.grid
    if source.n != grid.n or not np.isclose(source.box_length, grid.box_length, rtol=1e-14, atol=0):
        raise GridMismatchError("Resampling requires the same dimension and box length")
    k_max = min(source.points_per_dim, grid.points_per_dim) // 2 - 1
    modes = np.arange(-k_max, k_max + 1)
    src = np.ix_(*([modes % source.points_per_dim] * grid.n))
    dst = np.ix_(*([modes % grid.points_per_dim] * grid.n))
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    coeffs[dst] = f.coeffs[src]
    return SpectralField(grid=grid, coeffs=coeffs)


def dilate(f: SpectralField, m: int) -> SpectralField:
    """
    Scaling f_lambda(x) = lambda^2 f(lambda x) with lambda = 2^m

    Represented exactly on the companion grid of box L / lambda, where the
    mode index is unchanged and shell j of f becomes shell j + m.
    """
    factor = 2.0 ** (2 * m)
    return SpectralField(grid=f.grid.dilated(m), coeffs=f.coeffs * factor)


def evaluate_at(f: SpectralField, points: np.ndarray, chunk: int = 256) -> np.ndarray:
    """
    Evaluate the Fourier series of f at arbitrary points

    Args:
        f: Field
        points: Array of shape (P, n) of physical coordinates
        chunk: Points per block of the direct sum

    Returns:
        np.ndarray: Real values of shape (P,)
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != f.grid.n:
        raise ShapeMismatchError(f"Points must have {f.grid.n} columns, got {points.shape[1]}")
    active = np.nonzero(f.coeffs)
    coeffs = f.coeffs[active]
    k_axis = f.grid.k_axis
    wavevectors = np.stack([k_axis[idx] for idx in active], axis=1)
    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], chunk):
        block = points[start:start + chunk]
        phases = np.exp(1j * (block @ wavevectors.T))
        out[start:start + chunk] = np.real(phases @ coeffs)
    return out


def random_band_limited(
    grid: Grid,
    rng: np.random.Generator,
    max_index: int,
    envelope: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    zero_mean: bool = True,
) -> SpectralField:
    """
    Random real field with modes |m| <= max_index

    Coefficients are drawn on the lattice {-K..K}^n independently of M, so
    the same generator state gives the same physical field on any grid
    with M > 2K.

    Args:
        grid: Target grid
        rng: Random generator
        max_index: Largest mode index magnitude K
        envelope: Optional weight as a function of physical |k|
        zero_mean: Drop the k = 0 mode

    Returns:
        SpectralField: Random band-limited field
    """
    k_cap = int(max_index)
    if k_cap < 0 or 2 * k_cap >= grid.points_per_dim:
        raise ValueError(f"max_index must satisfy 0 <= 2K < M, got K={k_cap}, M={grid.points_per_dim}")
    size = (2 * k_cap + 1,) * grid.n
    raw = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    flipped = np.conj(raw[(slice(None, None, -1),) * grid.n])
    lattice = 0.5 * (raw + flipped)
    modes = np.arange(-k_cap, k_cap + 1)
    mesh = np.meshgrid(*([modes] * grid.n), indexing="ij", sparse=True)
    radius = np.sqrt(sum(m**2 for m in mesh))
    lattice = np.where(radius <= k_cap, lattice, 0.0)
    if envelope is not None:
        lattice = lattice * envelope(radius * grid.fundamental)
    if zero_mean:
        lattice[(k_cap,) * grid.n] = 0.0
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    coeffs[np.ix_(*([modes % grid.points_per_dim] * grid.n))] = lattice
    return SpectralField(grid=grid, coeffs=coeffs)
