"""Flow integrators: stability bound, positivity, conservation, equivalence.

Reference-run constants (this grid family, this package, numpy 2.x):

* sin1d convergence to its conserved mean follows sup|g - 2| ~ e^(-t/2)
  (the linearization about the constant 2 is a heat equation with
  diffusivity 1/2); measured ratio to e^(-t/2) within [0.98, 1.10] for
  t in [1, 11], and sup|g - 2| <= 5e-3 first holds near t = 10.7.
* tensor/potential discrepancy, sin1d N=256 dt=1e-4 T=0.1: 2.63e-10,
  improving by 4.00x under (dt/2, N x 2).
* rough1d (seed 42, N=512) smoothing probe over t in [1e-3, 1e-1]:
  max t*sup|Q|_g observed 0.040845; sup|Q| decays 51.8x across the window.
"""

import numpy as np
import pytest

from koszulflow import flow as fl
from koszulflow import geometry as geo
from koszulflow import registry as reg
from koszulflow.grid import PeriodicGrid

CTL = fl.StepControl()
EULER = fl.StepControl(scheme="euler")


def metric(name, sizes=None):
    built = reg.build_example(name, sizes=sizes)
    if isinstance(built, geo.PotentialMetric):
        return geo.metric_from_potential(built)
    return built


class TestStepControl:
    def test_validation(self):
        with pytest.raises(ValueError):
            fl.StepControl(sigma=0.0)
        with pytest.raises(ValueError):
            fl.StepControl(sigma=1.5)
        with pytest.raises(ValueError):
            fl.StepControl(scheme="rk4")
        with pytest.raises(ValueError):
            fl.StepControl(dt_min=0.0)


class TestStableDt:
    def test_flat_two_dimensional_formula(self):
        g = metric("flat", sizes=(64, 64))
        h = 2 * np.pi / 64
        assert fl.stable_dt(g, CTL) == pytest.approx(0.2 * h * h / 4.0, rel=1e-12)

    def test_scales_with_metric(self):
        grid = PeriodicGrid((64,), (2 * np.pi,))
        g1 = geo.MetricField(grid, np.ones((64, 1)))
        g2 = geo.MetricField(grid, 2.0 * np.ones((64, 1)))
        assert fl.stable_dt(g2, CTL) == pytest.approx(2.0 * fl.stable_dt(g1, CTL), rel=1e-12)

    def test_sin1d_uses_minimum_eigenvalue(self):
        g = metric("sin1d")
        h = g.grid.spacings[0]
        min_g = float(np.min(g.component(0, 0)))
        assert fl.stable_dt(g, CTL) == pytest.approx(0.2 * h * h * min_g / 2.0, rel=1e-12)


class TestStepTensor:
    def test_flat_is_exactly_stationary(self):
        g0 = metric("flat")
        state = fl.FlowState.initial(g0)
        for _ in range(200):
            state = fl.step_tensor(state, fl.stable_dt(state.g, CTL), CTL)
        assert np.max(np.abs(state.g.components - g0.components)) == 0.0
        assert np.max(np.abs(state.phi.values)) == 0.0

    def test_sin1d_single_euler_step_matches_probe(self):
        # beta(0) = 1/4 symbolically; truncation enters at O(h^2 * dt)
        state = fl.FlowState.initial(metric("sin1d"))
        stepped = fl.step_tensor(state, 1e-4, EULER)
        assert stepped.g.component(0, 0)[0] == pytest.approx(2.0 - 1e-4 * 0.25, abs=1e-7)
        assert stepped.t == 1e-4

    def test_rejection_retries_with_halved_step(self):
        # the Euler update of sin1d stays positive iff dt < min g^3... /beta,
        # about 7.59 at the binding node; dt=8 must be rejected once
        state = fl.FlowState.initial(metric("sin1d"))
        stepped = fl.step_tensor(state, 8.0, EULER)
        assert stepped.dt_last == pytest.approx(4.0)

    def test_blowup_after_exhausted_halvings(self):
        state = fl.FlowState.initial(metric("sin1d"))
        with pytest.raises(fl.FlowBlowup) as info:
            fl.step_tensor(state, 8.0, fl.StepControl(scheme="euler", max_halvings=0))
        assert info.value.t == 0.0
        assert info.value.node is not None

    def test_near_degenerate_node_triggers_retry_path(self):
        grid = PeriodicGrid((128,), (2 * np.pi,))
        x = grid.axis_coordinates(0)
        comps = (1e-3 + 1.0 - np.cos(x)).reshape(-1, 1)
        g0 = geo.MetricField(grid, comps)
        state = fl.FlowState.initial(g0)
        try:
            stepped = fl.step_tensor(state, 1.0, EULER)
            assert stepped.dt_last < 1.0
        except fl.FlowBlowup as exc:
            assert exc.t == 0.0

    def test_rk2_consistency_residual(self):
        # ||(g(t+dt) - g(t))/dt + beta(g(t+dt/2))||_sup <= C dt, C ~ 0.01 here
        state = fl.FlowState.initial(metric("sin1d", sizes=(256,)))
        for dt in (1e-3, 5e-4):
            full = fl.step_tensor(state, dt, CTL)
            half = fl.step_tensor(state, dt / 2, CTL)
            resid = np.max(
                np.abs((full.g.components - state.g.components) / dt + geo.beta_form(half.g).components)
            )
            assert resid <= 0.05 * dt


class TestRunFlow:
    def test_flat_diagnostics_are_trivial(self):
        _, rows = fl.run_flow(metric("flat"), 1.0, CTL, diag_stride=50)
        for row in rows:
            assert row.lambda_min == pytest.approx(1.0, abs=1e-12)
            assert row.lambda_max == pytest.approx(1.0, abs=1e-12)
            assert row.var_det == 0.0
            assert row.sup_q == 0.0

    def test_mean_conservation_along_sin1d_run(self):
        g0 = metric("sin1d", sizes=(256,))
        _, rows = fl.run_flow(g0, 5.0, CTL, diag_stride=0)
        for row in rows:
            assert max(abs(d) for d in row.mean_drift) <= 1e-10 * (1.0 + row.t)

    def test_sin1d_converges_to_conserved_mean(self):
        # decay law sup|g-2| ~ e^(-t/2); 5e-3 is reached near t = 10.7
        g0 = metric("sin1d", sizes=(256,))
        traj, _ = fl.run_flow(g0, 11.0, CTL, sample_times=(2.5, 5.0, 11.0), diag_stride=0)
        for state in traj:
            err = np.max(np.abs(state.g.component(0, 0) - 2.0))
            assert 0.95 <= err / np.exp(-state.t / 2.0) <= 1.10
        assert np.max(np.abs(traj[-1].g.component(0, 0) - 2.0)) <= 5e-3

    def test_one_dimensional_minimum_principle(self):
        state = fl.FlowState.initial(metric("sin1d", sizes=(256,)))
        previous = state.g.min_eigenvalue()
        for _ in range(500):
            state = fl.step_tensor(state, fl.stable_dt(state.g, EULER), EULER)
            current = state.g.min_eigenvalue()
            assert current >= previous - 1e-12
            previous = current

    def test_bump2d_determinant_variance_collapses(self):
        g0 = metric("bump2d")
        var0 = float(np.var(g0.det()))
        traj, _ = fl.run_flow(g0, 2.0, CTL, diag_stride=0)
        assert float(np.var(traj[-1].g.det())) <= var0 / 10.0

    def test_sample_times_are_hit_exactly(self):
        traj, _ = fl.run_flow(metric("flat"), 1.0, CTL, sample_times=(0.25, 0.5), diag_stride=0)
        assert [s.t for s in traj] == [0.25, 0.5, 1.0]

    def test_deterministic(self):
        g0 = metric("sin1d", sizes=(256,))
        _, rows1 = fl.run_flow(g0, 0.05, CTL, diag_stride=10)
        _, rows2 = fl.run_flow(g0, 0.05, CTL, diag_stride=10)
        assert [r.csv_values() for r in rows1] == [r.csv_values() for r in rows2]

    def test_blowup_carries_partial_results(self):
        # a dt floor above the stability bound with no halving budget makes
        # the very first step fail; run_flow must hand back its partials
        g0 = metric("sin1d", sizes=(128,))
        bad = fl.StepControl(scheme="euler", dt_min=0.5, max_halvings=0)
        with pytest.raises(fl.FlowBlowup) as info:
            fl.run_flow(g0, 1.0, bad, diag_stride=1)
        assert info.value.t == 0.0
        assert len(info.value.diagnostics) == 1  # the t=0 row
        assert info.value.trajectory == []


class TestPotentialFlow:
    def test_flat_potential_stays_exactly_zero(self):
        g0 = metric("flat")
        state = fl.PotentialFlowState.initial(g0)
        for _ in range(50):
            state = fl.step_potential(state, 1e-3, CTL)
        assert np.max(np.abs(state.phi.values)) == 0.0
        assert np.max(np.abs(state.g.components - g0.components)) == 0.0

    def test_two_euler_steps_unroll_in_closed_form(self):
        g0 = metric("sin1d", sizes=(256,))
        dt = 1e-3
        state = fl.PotentialFlowState.initial(g0)
        state = fl.step_potential(state, dt, EULER)
        assert np.max(np.abs(state.phi.values)) == 0.0  # log(det g0/det g0) = 0
        state = fl.step_potential(state, dt, EULER)
        beta0 = geo.beta_form(g0)
        shifted = geo.MetricField(g0.grid, g0.components - dt * beta0.components)
        expected = dt * (np.log(shifted.det()) - np.log(g0.det()))
        assert np.max(np.abs(state.phi.values - expected)) <= 1e-12

    def test_bump2d_reconstruction_stays_uniformly_positive(self):
        g0 = metric("bump2d")
        state = fl.PotentialFlowState.initial(g0)
        min_eig = np.inf
        while state.t < 0.1:
            dt = min(fl.stable_dt(state.g, CTL), 0.1 - state.t)
            state = fl.step_potential(state, dt, CTL)
            min_eig = min(min_eig, state.g.min_eigenvalue())
        assert min_eig > 0.5


class TestEquivalence:
    def test_flat_legs_coincide_exactly(self):
        assert fl.equivalence_check(metric("flat"), 0.5, CTL, 1e-2) == 0.0

    def test_euler_legs_are_the_same_discrete_map(self):
        # with matching one-stage schemes the scalar leg telescopes into the
        # tensor leg; only rounding survives
        d = fl.equivalence_check(metric("sin1d", sizes=(256,)), 0.05, EULER, 1e-4)
        assert d <= 1e-12

    def test_sin1d_discrepancy_and_refinement(self):
        coarse = fl.equivalence_check(metric("sin1d", sizes=(256,)), 0.1, CTL, 1e-4)
        fine = fl.equivalence_check(metric("sin1d", sizes=(512,)), 0.1, CTL, 5e-5)
        assert coarse <= 1e-4  # measured 2.63e-10
        assert coarse / fine >= 3.0  # measured 4.00


class TestSmoothingProbe:
    def test_flat_curvature_is_zero_at_all_times(self):
        series = fl.smoothing_probe(metric("flat"), (0.01, 0.02), CTL)
        assert all(sup_q == 0.0 for _, sup_q, _ in series)

    def test_rough1d_decay(self):
        g0 = metric("rough1d")
        series = fl.smoothing_probe(g0, (1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1), CTL)
        sup_first = series[0][1]
        sup_last = series[-1][1]
        assert sup_last <= sup_first / 10.0  # measured ratio 51.8
        assert max(t_sup for _, _, t_sup in series) <= 0.0413  # observed 0.040845

    def test_sample_validation(self):
        with pytest.raises(ValueError):
            fl.smoothing_probe(metric("flat"), (0.01, 0.005), CTL)
        with pytest.raises(ValueError):
            fl.smoothing_probe(metric("flat"), (-0.01,), CTL)
