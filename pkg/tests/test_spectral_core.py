"""
Tests for the pseudospectral core: transforms, multipliers and resampling.
"""

import math

import numpy as np
import pytest
import scipy.fft
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from schemas.grid import Grid
from services.exceptions import (
    GridMismatchError,
    InvalidMultiplierError,
    NegativeTimeError,
    ShapeMismatchError,
)
from services.spectral_core import (
    SpectralField,
    apply_multiplier,
    dealias_mask,
    dilate,
    divergence,
    evaluate_at,
    forward_transform,
    fractional_derivative,
    gradient,
    heat_propagator,
    inner_product,
    inverse_laplacian,
    inverse_laplacian_gradient,
    laplacian,
    product,
    random_band_limited,
    resample,
)


class TestGrid:
    """Grid validation and derived quantities."""

    def test_odd_points_rejected(self):
        with pytest.raises(ValueError):
            Grid(n=2, points_per_dim=33)

    def test_dimension_range(self):
        with pytest.raises(ValueError):
            Grid(n=4, points_per_dim=16)

    def test_wavenumbers(self, grid32):
        assert grid32.fundamental == pytest.approx(1.0)
        assert grid32.nyquist == pytest.approx(16.0)
        assert grid32.k_axis[1] == pytest.approx(1.0)
        assert grid32.k_axis[-1] == pytest.approx(-1.0)

    def test_dilated_grid_shifts_shell_range(self, grid32):
        j_min, j_max = grid32.shell_range
        assert grid32.dilated(1).shell_range == (j_min + 1, j_max + 1)


class TestTransforms:
    """Forward and inverse transforms."""

    def test_roundtrip(self, grid32, rng):
        values = rng.standard_normal(grid32.shape)
        field = forward_transform(values, grid32)
        assert_allclose(field.values, values, atol=1e-12)

    def test_zero_mode_is_mean(self, grid32, rng):
        values = rng.standard_normal(grid32.shape) + 3.0
        assert forward_transform(values, grid32).mean == pytest.approx(values.mean(), abs=1e-12)

    def test_shape_mismatch(self, grid32):
        with pytest.raises(ShapeMismatchError):
            forward_transform(np.zeros((16, 16)), grid32)

    def test_coefficients_are_read_only(self, random_field):
        with pytest.raises(ValueError):
            random_field.coeffs[0, 0] = 1.0

    def test_grid_mismatch_on_add(self, grid16, grid32):
        with pytest.raises(GridMismatchError):
            SpectralField.zeros(grid16) + SpectralField.zeros(grid32)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_parseval(self, seed):
        grid = Grid(n=2, points_per_dim=16)
        values = np.random.default_rng(seed).standard_normal(grid.shape)
        field = forward_transform(values, grid)
        assert inner_product(field, field) == pytest.approx(np.mean(values**2), rel=1e-12)

    def test_matches_direct_dft(self, grid16, rng):
        values = rng.standard_normal(grid16.shape)
        x = np.arange(grid16.points_per_dim) * grid16.spacing
        kernel = np.exp(-1j * np.outer(grid16.k_axis, x))
        expected = kernel @ values @ kernel.T / grid16.num_points
        assert_allclose(forward_transform(values, grid16).coeffs, expected, atol=1e-13)

    def test_real_fields_have_conjugate_symmetric_coefficients(self, grid32, rng):
        coeffs = forward_transform(rng.standard_normal(grid32.shape), grid32).coeffs
        mirrored = np.roll(np.flip(coeffs, axis=(0, 1)), 1, axis=(0, 1))
        assert_allclose(mirrored, np.conj(coeffs), atol=1e-14)


class TestMultipliers:
    """Derivatives, Poisson solve, heat propagator and dealiasing."""

    def test_gradient_of_sine(self, grid32):
        x, y = grid32.coordinates()
        f = SpectralField.from_values(np.sin(3 * x) * np.ones_like(y), grid32)
        dx, dy = gradient(f)
        assert_allclose(dx.values, 3 * np.cos(3 * x) * np.ones_like(y), atol=1e-12)
        assert_allclose(dy.values, 0.0, atol=1e-12)

    def test_divergence_of_gradient_is_laplacian(self, random_field):
        assert_allclose(divergence(gradient(random_field)).coeffs, laplacian(random_field).coeffs, atol=1e-12)

    def test_inverse_laplacian(self, random_field):
        assert_allclose(laplacian(inverse_laplacian(random_field)).coeffs, -random_field.coeffs, atol=1e-12)

    def test_inverse_laplacian_drops_mean(self, random_field):
        assert inverse_laplacian(random_field.with_mean(5.0)).mean == 0.0

    def test_odd_multipliers_stay_real(self, grid16, rng):
        field = forward_transform(rng.standard_normal(grid16.shape), grid16)
        for component in gradient(field) + inverse_laplacian_gradient(field):
            imaginary = np.imag(scipy.fft.ifftn(component.coeffs))
            assert np.max(np.abs(imaginary)) < 1e-14

    def test_non_finite_multiplier_rejected(self, random_field):
        with pytest.raises(InvalidMultiplierError):
            apply_multiplier(random_field, lambda k1, k2: 1.0 / k1)

    def test_non_finite_zero_mode_is_zeroed(self, random_field):
        out = apply_multiplier(random_field.with_mean(2.0), lambda k1, k2: 1.0 / (k1**2 + k2**2))
        assert out.mean == 0.0
        assert_allclose(out.coeffs, inverse_laplacian(random_field).coeffs, atol=1e-14)

    def test_heat_propagator_on_mode(self, grid32):
        x, y = grid32.coordinates()
        f = SpectralField.from_values(np.cos(2 * x + y), grid32)
        assert_allclose(heat_propagator(f, 0.3).values, math.exp(-5 * 0.3) * np.cos(2 * x + y), atol=1e-12)

    def test_heat_semigroup(self, random_field):
        composed = heat_propagator(heat_propagator(random_field, 0.3), 0.7)
        assert_allclose(composed.coeffs, heat_propagator(random_field, 1.0).coeffs, atol=1e-15)

    def test_gradient_is_minus_adjoint_of_divergence(self, grid16, rng):
        """<grad f, G> = -<f, div G> for arbitrary (Nyquist-carrying) samples."""
        f = forward_transform(rng.standard_normal(grid16.shape), grid16)
        components = [forward_transform(rng.standard_normal(grid16.shape), grid16) for _ in range(2)]
        left = sum(inner_product(df, g) for df, g in zip(gradient(f), components))
        right = -inner_product(f, divergence(components))
        assert left == pytest.approx(right, abs=1e-12)

    def test_product_matches_fine_grid(self, grid32, rng):
        """On 2M points the product is alias-free; truncating it back reproduces the 2/3 rule."""
        f = random_band_limited(grid32, rng, 10)
        g = random_band_limited(grid32, rng, 10)
        fine = Grid(n=2, points_per_dim=64, box_length=grid32.box_length)
        exact = forward_transform(resample(f, fine).values * resample(g, fine).values, fine)
        expected = resample(exact, grid32).coeffs * dealias_mask(grid32)
        assert_allclose(product(f, g).coeffs, expected, atol=1e-14)

    def test_negative_time(self, random_field):
        with pytest.raises(NegativeTimeError):
            heat_propagator(random_field, -1e-3)

    def test_fractional_derivative_of_mode(self, grid32):
        x, y = grid32.coordinates()
        f = SpectralField.from_values(np.sin(4 * x) * np.ones_like(y), grid32)
        assert_allclose(fractional_derivative(f, 1.5).values, 8.0 * f.values, atol=1e-11)

    def test_dealias_mask(self, grid32):
        mask = dealias_mask(grid32)
        assert mask[10, 0] and mask[-10, 10]
        assert not mask[11, 0] and not mask[0, -11]

    def test_product_of_low_modes_is_exact(self, grid32):
        x, y = grid32.coordinates()
        f = SpectralField.from_values(np.sin(2 * x) * np.cos(y), grid32)
        g = SpectralField.from_values(np.cos(3 * y) * np.ones_like(x), grid32)
        assert_allclose(product(f, g).values, f.values * g.values, atol=1e-12)


class TestScalingAndResampling:
    """Dilation, resampling, point evaluation and random fields."""

    def test_dilate_values(self, random_field):
        dilated = dilate(random_field, 1)
        assert dilated.grid.box_length == pytest.approx(random_field.grid.box_length / 2)
        assert_allclose(dilated.values, 4.0 * random_field.values, atol=1e-12)

    def test_resample_roundtrip(self, random_field):
        fine = resample(random_field, random_field.grid.refined(2))
        assert_allclose(resample(fine, random_field.grid).coeffs, random_field.coeffs, atol=1e-15)

    def test_resample_other_box(self, random_field):
        with pytest.raises(GridMismatchError):
            resample(random_field, random_field.grid.dilated(1))

    def test_evaluate_at_grid_points(self, random_field):
        x, y = random_field.grid.coordinates()
        points = np.stack([np.broadcast_to(x, random_field.grid.shape).ravel(),
                           np.broadcast_to(y, random_field.grid.shape).ravel()], axis=1)
        assert_allclose(evaluate_at(random_field, points), random_field.values.ravel(), atol=1e-11)

    def test_random_field_independent_of_resolution(self):
        coarse = random_band_limited(Grid(n=2, points_per_dim=32), np.random.default_rng(5), 6)
        fine = random_band_limited(Grid(n=2, points_per_dim=64), np.random.default_rng(5), 6)
        points = np.random.default_rng(0).uniform(0, 2 * math.pi, size=(50, 2))
        assert_allclose(evaluate_at(coarse, points), evaluate_at(fine, points), atol=1e-12)

    def test_random_field_is_real_and_zero_mean(self, random_field):
        assert random_field.mean == 0.0
        assert np.max(np.abs(np.imag(scipy.fft.ifftn(random_field.coeffs)))) < 1e-14

    def test_laplacian_in_3d(self, grid3d):
        x, y, z = grid3d.coordinates()
        f = SpectralField.from_values(np.sin(x) * np.cos(2 * y) * np.sin(z), grid3d)
        assert_allclose(laplacian(f).values, -6.0 * f.values, atol=1e-12)
