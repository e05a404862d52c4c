"""
Pytest configuration and shared fixtures for all tests.
"""

import math

import numpy as np
import pytest

from schemas.grid import Grid
from schemas.solver import SolverConfig
from services.constant_store import ConstantStore
from services.dh_solver import StatePair, random_state
from services.littlewood_paley import build_partition
from services.spectral_core import random_band_limited


@pytest.fixture
def grid16():
    """Coarse 2D grid for solver tests."""
    return Grid(n=2, points_per_dim=16)


@pytest.fixture
def grid32():
    """2D grid on the standard 2*pi box."""
    return Grid(n=2, points_per_dim=32)


@pytest.fixture
def grid3d():
    """Small 3D grid."""
    return Grid(n=3, points_per_dim=16)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def partition():
    return build_partition()


@pytest.fixture
def random_field(grid32, rng):
    """Zero-mean band-limited field on grid32."""
    return random_band_limited(grid32, rng, max_index=10)


@pytest.fixture
def small_config():
    """Short 2D solver configuration: 8 steps of 5e-3."""
    return SolverConfig(dimension=2, dt=5e-3, horizon=0.04, picard_tol=1e-10, picard_max_iter=40)


@pytest.fixture
def small_state(grid16, rng):
    """Neutral random state with small amplitude."""
    return random_state(grid16, rng) * 1e-2


@pytest.fixture
def gaussian_state(grid32):
    """v = w = a narrow Gaussian bump; the drift term vanishes identically."""
    x, y = grid32.coordinates()
    center = math.pi
    values = np.exp(-((x - center) ** 2 + (y - center) ** 2) / 0.5)
    return StatePair.from_values(values, values, grid32)


@pytest.fixture
def memory_store():
    """Constant store on an in-memory SQLite database."""
    return ConstantStore(url="sqlite://")
