"""
Tests for the experiment drivers.
"""

import math

import numpy as np
import pytest

from schemas.experiments import ExperimentKind, ExperimentSpec, SelfSimilarProfile, SolutionMethod
from schemas.solver import SolverConfig
from services.exceptions import ExperimentRefusedError
from services.experiments import (
    continuation_intervals,
    equivariance_experiment,
    long_horizon,
    resolve_constants,
    run_experiment,
    scaled_random_data,
    self_similar_data,
    self_similar_experiment,
    stability_experiment,
    threshold_sweep,
)
from services.dh_solver import estimate_c0, heat_flow, monitor_norm, pair_besov_norm
from services.spectral_core import evaluate_at

SHORT_SOLVER = SolverConfig(dimension=2, dt=0.01, horizon=0.04)


def make_spec(kind: ExperimentKind, **overrides) -> ExperimentSpec:
    fields = {"kind": kind, "points_per_dim": 16, "solver": SHORT_SOLVER, "trials": 2}
    fields.update(overrides)
    return ExperimentSpec(**fields)


class TestHelpers:
    def test_scaled_random_data_has_requested_norm(self, grid16, rng):
        data = scaled_random_data(grid16, SHORT_SOLVER, rng, 0.3)
        assert pair_besov_norm(data, SHORT_SOLVER) == pytest.approx(0.3)
        assert data.is_neutral()

    def test_continuation_intervals(self):
        assert continuation_intervals(0.4, 3.0) == 1
        assert continuation_intervals(1.0, 3.0) == 8

    def test_long_horizon(self, grid16):
        assert long_horizon(grid16, 50.0) == pytest.approx(50.0)
        assert long_horizon(grid16.dilated(1), 8.0) == pytest.approx(2.0)

    def test_supplied_constants_skip_measurement(self, grid16):
        spec = make_spec(ExperimentKind.THRESHOLD_SWEEP, constants={"C0": 2.0, "C1": 3.0})
        assert resolve_constants(spec, grid16, SHORT_SOLVER, ("C0", "C1")) == {"C0": 2.0, "C1": 3.0}

    def test_store_caches_measured_constant(self, grid16, memory_store):
        spec = make_spec(ExperimentKind.THRESHOLD_SWEEP)
        first = resolve_constants(spec, grid16, SHORT_SOLVER, ("C0",), memory_store)
        again = resolve_constants(spec, grid16, SHORT_SOLVER, ("C0",), memory_store)
        assert first == again
        assert first["C0"] > 0


class TestEquivariance:
    """Exact parabolic scaling on the dilated box."""

    @pytest.mark.parametrize("method", [SolutionMethod.EVOLVE, SolutionMethod.PICARD])
    def test_passes(self, method):
        verdict = equivariance_experiment(make_spec(ExperimentKind.EQUIVARIANCE, amplitude=1e-2, method=method))
        assert verdict.passed
        assert verdict.metrics["max_relative_deviation"] <= 1e-6
        assert verdict.metrics["steps"] == SHORT_SOLVER.n_steps
        assert len(verdict.series["deviation"]) == SHORT_SOLVER.n_steps + 1


class TestStability:
    """Lipschitz dependence on the data."""

    def test_linear_regime(self):
        spec = make_spec(ExperimentKind.STABILITY, amplitude=1e-3, perturbations=[1e-3, 1e-5],
                         r_values=[2.0, math.inf])
        verdict = stability_experiment(spec)
        assert verdict.passed
        assert set(verdict.metrics["spread"]) == {"2", "inf"}
        assert all(spread < 2.0 for spread in verdict.metrics["spread"].values())
        assert verdict.metrics["measured_lipschitz"] == pytest.approx(1.0, rel=0.1)
        assert "predicted_lipschitz" not in verdict.metrics

    def test_supplied_c0_adds_predictions(self):
        spec = make_spec(ExperimentKind.STABILITY, amplitude=1e-3, perturbations=[1e-4],
                         r_values=[4.0], constants={"C0": 1.0})
        verdict = stability_experiment(spec)
        assert verdict.metrics["continuation_intervals"] == 1
        assert verdict.metrics["predicted_lipschitz"] > 1.0

    def test_nonlinear_regime_within_predicted_bound(self, grid16):
        """At a tenth of 1/(4 C0) the measured Lipschitz factor stays below 1/(1 - 4 eps C0)."""
        c0 = estimate_c0(SHORT_SOLVER, grid16, trials=6, seed=0)
        unit_spec = make_spec(ExperimentKind.STABILITY, amplitude=1.0, perturbations=[1e-2, 1e-4], r_values=[2.0])
        unit_data = scaled_random_data(grid16, SHORT_SOLVER, np.random.default_rng(unit_spec.seed), 1.0)
        unit_eps = monitor_norm(heat_flow(unit_data, SHORT_SOLVER.time_grid()), SHORT_SOLVER)
        amplitude = 0.1 / (4.0 * c0 * unit_eps)
        spec = unit_spec.model_copy(update={"amplitude": amplitude, "constants": {"C0": c0}})
        verdict = stability_experiment(spec)
        assert verdict.metrics["predicted_lipschitz"] == pytest.approx(1.0 / 0.9, rel=1e-6)
        assert verdict.metrics["measured_lipschitz"] <= verdict.metrics["predicted_lipschitz"]
        assert verdict.passed


class TestSelfSimilar:
    """Profile collapse for the degree -2 data."""

    def test_heat_kernel_profiles_collapse(self):
        spec = make_spec(ExperimentKind.SELF_SIMILAR, points_per_dim=64, amplitude=1.0,
                         profile=SelfSimilarProfile.HEAT_KERNEL, time_doublings=3, window=0.75)
        verdict = self_similar_experiment(spec)
        assert verdict.passed
        assert verdict.metrics["max_profile_deviation"] < 0.05
        assert len(verdict.series["profile_deviation"]) == 3

    def test_quadrupole_data_is_neutral_and_odd(self, grid32):
        spec = make_spec(ExperimentKind.SELF_SIMILAR, points_per_dim=32, amplitude=1e-3)
        data, offset = self_similar_data(grid32, spec)
        assert offset == pytest.approx((spec.inner_cells * grid32.spacing) ** 2)
        assert data.v.mean == 0.0
        np.testing.assert_allclose(data.w.coeffs, -data.v.coeffs)

    def test_quadrupole_data_is_heat_smoothed_profile(self, grid32):
        """Away from the outer cutoff the data equal e^{sigma Delta} cos(2 theta) / r^2."""
        spec = make_spec(ExperimentKind.SELF_SIMILAR, points_per_dim=32, amplitude=1.0)
        data, sigma = self_similar_data(grid32, spec)
        center = grid32.box_length / 2.0
        radius = math.sqrt(sigma)
        points = np.array([[center + radius, center], [center, center + radius]])
        rho = radius**2 / (4.0 * sigma)
        expected = (1.0 - (1.0 + rho) * math.exp(-rho)) / radius**2
        values = evaluate_at(data.v, points)
        assert values[0] == pytest.approx(expected, rel=1e-6)
        assert values[1] == pytest.approx(-expected, rel=1e-6)

    def test_base_time_before_smoothing_rejected(self):
        with pytest.raises(ValueError):
            make_spec(ExperimentKind.SELF_SIMILAR, points_per_dim=32, base_time=1e-4)

    def test_large_quadrupole_is_refused(self):
        spec = make_spec(ExperimentKind.SELF_SIMILAR, points_per_dim=32, amplitude=1e3,
                         constants={"C0": 10.0, "C1": 10.0})
        with pytest.raises(ExperimentRefusedError):
            self_similar_experiment(spec)

    def test_profiles_need_two_dimensions(self):
        with pytest.raises(ValueError):
            make_spec(ExperimentKind.SELF_SIMILAR, n=3, solver=SolverConfig(dimension=3),
                      profile=SelfSimilarProfile.HEAT_KERNEL)


@pytest.mark.slow
@pytest.mark.experiment
class TestQuadrupoleCollapse:
    """Small quadrupole data collapse onto one profile, better on finer grids."""

    @staticmethod
    def deviation(points: int) -> float:
        spec = make_spec(ExperimentKind.SELF_SIMILAR, points_per_dim=points, amplitude=1e-3,
                         constants={"C0": 0.1, "C1": 1.0})
        verdict = self_similar_experiment(spec)
        assert not verdict.notes
        return verdict.metrics["max_profile_deviation"]

    def test_collapses_at_256(self):
        assert self.deviation(256) < 0.05

    def test_deviation_shrinks_under_refinement(self):
        assert self.deviation(256) < self.deviation(128)


@pytest.mark.slow
@pytest.mark.experiment
class TestThresholdSweep:
    def test_sweep_with_supplied_constants(self):
        spec = make_spec(
            ExperimentKind.THRESHOLD_SWEEP, constants={"C0": 1.0, "C1": 1.0}, sweep_steps=8,
            bisection_steps=3, monotonicity_samples=3, long_horizon_factor=2.0,
            solver=SHORT_SOLVER.model_copy(update={"picard_max_iter": 30, "picard_tol": 1e-8}),
        )
        verdict = threshold_sweep(spec)
        assert verdict.metrics["predicted_threshold"] == pytest.approx(0.25)
        assert verdict.metrics["evaluations"] > 0
        assert sorted(verdict.series["amplitude"]) == verdict.series["amplitude"]


class TestRunExperiment:
    """Dispatch and the run ledger."""

    def test_records_run(self, memory_store):
        spec = make_spec(ExperimentKind.EQUIVARIANCE, amplitude=1e-2)
        verdict = run_experiment(spec, store=memory_store)
        runs = memory_store.list_runs("equivariance")
        assert len(runs) == 1
        assert runs[0]["passed"] == verdict.passed
        assert runs[0]["verdict"]["metrics"]["steps"] == SHORT_SOLVER.n_steps

    def test_bernstein_audit_kind(self):
        spec = ExperimentSpec(kind=ExperimentKind.BERNSTEIN_AUDIT, points_per_dim=64, trials=5,
                              shells=[1, 2], s=1.0, p=2.0, q=2.0)
        verdict = run_experiment(spec)
        assert verdict.constants["bernstein_max"] > 0
        assert len(verdict.series["max_ratio"]) == 2

    def test_heat_audit_kind(self):
        spec = make_spec(ExperimentKind.HEAT_AUDIT, horizons=[0.1, 1.0], r_values=[2.0, math.inf])
        verdict = run_experiment(spec)
        assert {"C1", "C2"} <= set(verdict.constants)

    def test_product_audit_kind(self):
        verdict = run_experiment(make_spec(ExperimentKind.PRODUCT_AUDIT, trials=4))
        assert verdict.passed
        assert verdict.constants["product_max"] > 0
