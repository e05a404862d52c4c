"""
Tests for the dyadic partition, Littlewood-Paley blocks and Besov norms.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from schemas.besov import BesovIndex, Measure
from schemas.grid import Grid
from services.exceptions import ExponentOrderError
from services.littlewood_paley import (
    DyadicPartition,
    bernstein_audit,
    besov_norm,
    besov_report,
    dyadic_block,
    dyadic_blocks,
    frequency_split,
    low_pass,
    lp_norm,
    shell_symbol,
)
from services.spectral_core import SpectralField, dilate, random_band_limited


class TestDyadicPartition:
    """Partition of unity and supports."""

    def test_homogeneous_partition_of_unity(self, partition):
        radii = np.random.default_rng(0).uniform(-3, 3, size=10_000)
        radii = 10.0**radii
        total = sum(partition.phi(radii * 2.0**-j) for j in range(-15, 16))
        assert_allclose(total, 1.0, atol=1e-12)

    def test_inhomogeneous_partition_of_unity(self, partition):
        radii = np.concatenate([[0.0], 10.0 ** np.random.default_rng(1).uniform(-3, 3, size=10_000)])
        total = partition.psi(radii) + sum(partition.phi(radii * 2.0**-j) for j in range(0, 16))
        assert_allclose(total, 1.0, atol=1e-12)

    def test_phi_support(self, partition):
        inner, outer = partition.annulus
        assert np.all(partition.phi(np.array([0.1, inner, outer, 5.0])) == 0.0)
        assert partition.phi(np.array([1.5]))[0] > 0.0

    def test_chi_plateau(self, partition):
        assert_allclose(partition.chi(np.array([0.0, 0.5, 1.0])), 1.0)
        assert_allclose(partition.chi(np.array([4.0 / 3.0, 2.0])), 0.0)

    def test_invalid_radii(self):
        with pytest.raises(ValueError):
            DyadicPartition(inner_radius=1.0, outer_radius=3.0)


class TestBlocks:
    """Dyadic blocks of fields on the torus."""

    def test_blocks_sum_to_field(self, random_field):
        total = sum(block.coeffs for block in dyadic_blocks(random_field).values())
        assert_allclose(total, random_field.coeffs, atol=1e-13)

    def test_almost_orthogonality(self, grid32):
        rng = np.random.default_rng(7)
        for _ in range(100):
            f = random_band_limited(grid32, rng, 15)
            for j in grid32.shells:
                for jj in grid32.shells:
                    if abs(j - jj) >= 2:
                        twice = dyadic_block(dyadic_block(f, int(j)), int(jj))
                        assert np.max(np.abs(twice.coeffs)) <= 1e-12

    def test_block_outside_range_is_zero(self, random_field):
        j_min, j_max = random_field.grid.shell_range
        assert not np.any(dyadic_block(random_field, j_max + 3).coeffs)
        assert not np.any(dyadic_block(random_field, j_min - 3).coeffs)

    def test_shell_symbol_vanishes_at_zero_mode(self, grid32):
        for j in grid32.shells:
            assert shell_symbol(grid32, int(j))[0, 0] == 0.0

    def test_low_pass_keeps_mean_and_low_blocks(self, random_field):
        f = random_field.with_mean(1.5)
        expected = sum(dyadic_block(f, int(k)).coeffs for k in f.grid.shells if k <= 1)
        expected[0, 0] = f.mean
        low = low_pass(f, 2)
        assert low.mean == pytest.approx(1.5)
        assert_allclose(low.coeffs, expected, atol=1e-12)

    def test_frequency_split_is_exact(self, random_field):
        high, low = frequency_split(random_field, 2)
        assert_allclose((high + low).coeffs, random_field.coeffs)
        assert np.all(high.coeffs[random_field.grid.k_magnitude <= 4.0] == 0)

    def test_block_is_difference_of_low_passes(self, random_field):
        for j in random_field.grid.shells:
            j = int(j)
            expected = low_pass(random_field, j + 1).coeffs - low_pass(random_field, j).coeffs
            assert_allclose(dyadic_block(random_field, j).coeffs, expected, atol=1e-13)


class TestBesovNorms:
    """Besov norm properties."""

    def test_single_mode_norm(self, grid32):
        x, y = grid32.coordinates()
        f = SpectralField.from_values(np.cos(x) * np.ones_like(y), grid32)
        lp = lp_norm(f, 2.0)
        assert lp == pytest.approx(1 / math.sqrt(2))
        # |k| = 1 sits in shell -1 only
        assert besov_norm(f, BesovIndex(s=0.7, p=2, q=2)) == pytest.approx(2.0**-0.7 * lp, rel=1e-12)

    @pytest.mark.parametrize("n,p", [(2, 2.0), (3, 2.0), (3, 4.0)])
    def test_critical_norm_is_dilation_invariant(self, n, p):
        grid = Grid(n=n, points_per_dim=16 if n == 3 else 32)
        f = random_band_limited(grid, np.random.default_rng(3), 5)
        idx = BesovIndex.critical(n, p, 2.0)
        base = besov_norm(f, idx, measure=Measure.LEBESGUE)
        scaled = besov_norm(dilate(f, 1), idx, measure=Measure.LEBESGUE)
        assert scaled == pytest.approx(base, rel=1e-10)

    @pytest.mark.parametrize("s", [-1.5, 0.0, 0.75])
    def test_general_dilation_exponent(self, grid32, s):
        f = random_band_limited(grid32, np.random.default_rng(4), 8)
        idx = BesovIndex(s=s, p=2.0, q=2.0)
        ratio = besov_norm(dilate(f, 1), idx, measure=Measure.LEBESGUE) / besov_norm(f, idx, measure=Measure.LEBESGUE)
        assert math.log2(ratio) == pytest.approx(2.0 + s - 2.0 / 2.0, abs=1e-10)

    def test_normalized_measure_exponent(self, grid32):
        f = random_band_limited(grid32, np.random.default_rng(4), 8)
        idx = BesovIndex(s=-0.5, p=2.0, q=2.0)
        ratio = besov_norm(dilate(f, 1), idx) / besov_norm(f, idx)
        assert math.log2(ratio) == pytest.approx(2.0 + idx.s, abs=1e-10)

    @settings(max_examples=15, deadline=None)
    @given(scale=st.floats(min_value=1e-3, max_value=1e3), seed=st.integers(0, 1000))
    def test_homogeneity(self, scale, seed):
        grid = Grid(n=2, points_per_dim=16)
        f = random_band_limited(grid, np.random.default_rng(seed), 4)
        idx = BesovIndex(s=-0.25, p=3.0, q=1.0)
        assert besov_norm(f * scale, idx) == pytest.approx(scale * besov_norm(f, idx), rel=1e-12)

    def test_sup_summability(self, random_field):
        report = besov_report(random_field, BesovIndex(s=0.0, p=2.0, q=math.inf))
        assert report.norm == pytest.approx(max(row.shell_lp_norm for row in report.rows))

    def test_report_rows_and_mean(self, random_field):
        report = besov_report(random_field.with_mean(0.25), BesovIndex(s=-1.0, p=2.0, q=2.0))
        assert report.mean == pytest.approx(0.25)
        assert [row.j for row in report.rows] == list(random_field.grid.shells)
        assert report.csv_rows()[-1][0] == "total"

    def test_theorem_range(self):
        with pytest.raises(ValueError):
            BesovIndex.critical(2, 4.0, 2.0)


class TestBernsteinAudit:
    """Empirical Bernstein constants."""

    @pytest.mark.parametrize("p,q", [(2.0, 2.0), (2.0, math.inf), (1.0, 2.0)])
    def test_bounded_across_shells(self, p, q):
        grid = Grid(n=2, points_per_dim=64)
        report = bernstein_audit(None, grid, 1.0, p, q, trials=50, seed=0, shells=(1, 2, 3, 4))
        assert len(report.rows) == 4
        assert all(0 < row.min_ratio <= row.max_ratio for row in report.rows)
        assert math.isfinite(report.max_ratio)
        assert report.constants["bernstein_max"] == report.max_ratio

    def test_sharp_l2_constant(self):
        grid = Grid(n=2, points_per_dim=64)
        report = bernstein_audit(None, grid, 1.0, 2.0, 2.0, trials=20, seed=1)
        assert report.max_ratio <= 1.0 + 1e-12

    @pytest.mark.slow
    @pytest.mark.parametrize("p,q", [(2.0, 2.0), (2.0, math.inf), (1.0, 2.0)])
    def test_stable_across_shells_on_a_wide_box(self, p, q):
        """With hundreds of lattice modes in shell 1 the per-shell maxima agree within 20%."""
        grid = Grid(n=2, points_per_dim=256, box_length=8.0 * math.pi)
        report = bernstein_audit(None, grid, 1.0, p, q, trials=50, seed=0, shells=(1, 2, 3, 4))
        assert len(report.rows) == 4
        assert report.stable

    def test_order_of_exponents(self, grid32):
        with pytest.raises(ExponentOrderError):
            bernstein_audit(None, grid32, 0.0, 4.0, 2.0, trials=1)

    def test_unrepresentable_shell_skipped(self, grid32):
        report = bernstein_audit(None, grid32, 0.0, 2.0, 2.0, trials=2, shells=(1, 10))
        assert [row.j for row in report.rows] == [1]
        assert any("shell 10" in note for note in report.notes)
