"""Time integration of the metric flow dg/dt = -beta(g) and its scalar twin.

Two independent integrators are provided:

* the tensor leg evolves the metric directly (Euler or explicit midpoint
  RK2) and accumulates the potential phi(x, t) = integral of
  log(det g / det g0) by the trapezoid rule;
* the potential leg evolves phi through the parabolic scalar equation
  dphi/dt = log det(g0 - t beta(g0) + dd(phi)) - log det(g0), phi(0) = 0,
  reconstructing the metric as g0 - t beta(g0) + dd(phi).

In the continuum the two legs produce the same metric;
:func:`equivalence_check` measures the discrete discrepancy.

Positivity is the existence monitor: a step whose updated metric fails
nodewise positive definiteness is rejected and retried with half the step,
and :class:`FlowBlowup` is raised once the halving budget (or ``dt_min``)
is exhausted -- the flow has left its window of uniform equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    MetricField,
    NotPositiveDefinite,
    Sym2Field,
    beta_form,
    curvature_gnorm,
    hessian_curvature_from_metric,
    pencil_eigenvalue_range,
    sym_min_eigenvalues,
    sym_pairs,
)
from .grid import ScalarField, partial2

_SCHEMES = ("euler", "rk2")


class FlowBlowup(RuntimeError):
    """The integrator left the positivity window.

    Carries the last valid time, the offending node, and whatever partial
    trajectory/diagnostics the run had produced.
    """

    def __init__(self, t: float, node: tuple[int, ...] | None, trajectory=None, diagnostics=None):
        self.t = t
        self.node = node
        self.trajectory = trajectory if trajectory is not None else []
        self.diagnostics = diagnostics if diagnostics is not None else []
        super().__init__(f"flow left the positivity window at t={t:.6g} (node {node})")


@dataclass(frozen=True)
class StepControl:
    """Explicit-scheme step control."""

    sigma: float = 0.2
    dt_min: float = 1e-15
    max_halvings: int = 20
    scheme: str = "rk2"

    def __post_init__(self):
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"sigma must be in (0, 1], got {self.sigma}")
        if self.dt_min <= 0.0:
            raise ValueError("dt_min must be positive")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")


@dataclass(frozen=True)
class FlowState:
    """Snapshot of the tensor flow: metric, accumulated potential, step info."""

    t: float
    g: MetricField
    phi: ScalarField
    dt_last: float
    g0: MetricField

    @classmethod
    def initial(cls, g0: MetricField) -> "FlowState":
        return cls(t=0.0, g=g0, phi=ScalarField.zeros(g0.grid), dt_last=0.0, g0=g0)


@dataclass(frozen=True)
class DiagnosticsRow:
    """One monitoring record; field order is the CSV column order."""

    t: float
    sup_q: float
    t_sup_q: float
    lambda_min: float
    lambda_max: float
    var_det: float
    mean_drift: tuple[float, ...]
    sup_phi: float
    dt: float

    @staticmethod
    def csv_header(ndim: int) -> list[str]:
        drift = [f"drift_g{i}{j}" for i, j in sym_pairs(ndim)]
        return ["t", "sup_q", "t_sup_q", "lambda_min", "lambda_max", "var_det",
                *drift, "sup_phi", "dt"]

    def csv_values(self) -> list[float]:
        return [self.t, self.sup_q, self.t_sup_q, self.lambda_min, self.lambda_max,
                self.var_det, *self.mean_drift, self.sup_phi, self.dt]


def stable_dt(g: MetricField, control: StepControl) -> float:
    """Explicit stability bound sigma * min(h^2) / (2 n max lambda(g^-1))."""
    n = g.grid.ndim
    min_eig = float(np.min(sym_min_eigenvalues(g.components, n)))
    lam_max_inv = 1.0 / min_eig
    return control.sigma * min(h * h for h in g.grid.spacings) / (2.0 * n * lam_max_inv)


def _log_det_ratio(g: MetricField, g0: MetricField) -> np.ndarray:
    return np.log(g.det()) - np.log(g0.det())


def _attempt_tensor_step(state: FlowState, dt: float, scheme: str) -> FlowState:
    """One explicit step of the given size; raises NotPositiveDefinite on failure."""
    g = state.g
    if scheme == "euler":
        update = beta_form(g)
    else:  # midpoint RK2
        b1 = beta_form(g)
        g_half = MetricField(g.grid, g.components - (0.5 * dt) * b1.components)
        update = beta_form(g_half)
    g_new = MetricField(g.grid, g.components - dt * update.components)
    ratio_old = _log_det_ratio(g, state.g0)
    ratio_new = _log_det_ratio(g_new, state.g0)
    phi_new = ScalarField(g.grid, state.phi.values + (0.5 * dt) * (ratio_old + ratio_new))
    return FlowState(t=state.t + dt, g=g_new, phi=phi_new, dt_last=dt, g0=state.g0)


def step_tensor(state: FlowState, dt: float, control: StepControl) -> FlowState:
    """Advance the tensor flow by ``dt``, halving on positivity failures."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    node = None
    for _ in range(control.max_halvings + 1):
        if dt < control.dt_min:
            break
        try:
            return _attempt_tensor_step(state, dt, control.scheme)
        except NotPositiveDefinite as exc:
            node = exc.node
            dt *= 0.5
    raise FlowBlowup(state.t, node)


def diagnostics_row(state: FlowState, dt_used: float) -> DiagnosticsRow:
    """Monitoring record for one state (curvature norm, pinching, drift)."""
    g, g0 = state.g, state.g0
    q_full = hessian_curvature_from_metric(g)
    sup_q = float(np.max(curvature_gnorm(q_full, g)))
    lam, big_lam = pencil_eigenvalue_range(g, g0)
    drift = tuple(
        float(np.mean(g.component(i, j)) - np.mean(g0.component(i, j)))
        for i, j in sym_pairs(g.grid.ndim)
    )
    return DiagnosticsRow(
        t=state.t,
        sup_q=sup_q,
        t_sup_q=state.t * sup_q,
        lambda_min=lam,
        lambda_max=big_lam,
        var_det=float(np.var(g.det())),
        mean_drift=drift,
        sup_phi=float(np.max(np.abs(state.phi.values))),
        dt=dt_used,
    )


def run_flow(
    g0: MetricField,
    t_final: float,
    control: StepControl,
    sample_times: Sequence[float] | None = None,
    diag_stride: int = 100,
) -> tuple[list[FlowState], list[DiagnosticsRow]]:
    """Integrate to ``t_final`` with adaptive steps.

    Returns states at the requested sample times (``t_final`` is always
    included) and diagnostics rows at t=0, every ``diag_stride``-th accepted
    step, every sample time, and the end.  On blow-up the partial trajectory
    and diagnostics ride on the raised :class:`FlowBlowup`.
    """
    if t_final <= 0.0:
        raise ValueError("t_final must be positive")
    targets = sorted({float(s) for s in (sample_times or []) if 0.0 < s <= t_final} | {t_final})

    state = FlowState.initial(g0)
    trajectory: list[FlowState] = []
    rows: list[DiagnosticsRow] = [diagnostics_row(state, 0.0)]
    if sample_times and any(s == 0.0 for s in sample_times):
        trajectory.append(state)

    steps = 0
    try:
        for target in targets:
            while state.t < target:
                dt = min(stable_dt(state.g, control), target - state.t)
                state = step_tensor(state, dt, control)
                steps += 1
                if diag_stride > 0 and steps % diag_stride == 0 and state.t < target:
                    rows.append(diagnostics_row(state, state.dt_last))
            trajectory.append(state)
            rows.append(diagnostics_row(state, state.dt_last))
    except FlowBlowup as exc:
        raise FlowBlowup(exc.t, exc.node, trajectory, rows) from None
    return trajectory, rows


# --- potential (scalar) leg ---------------------------------------------------

@dataclass(frozen=True)
class PotentialFlowState:
    """Scalar-leg snapshot: potential, its reconstruction, and frozen data."""

    t: float
    phi: ScalarField
    g0: MetricField
    beta0: Sym2Field
    g: MetricField  # reconstruction g0 - t beta0 + dd(phi)

    @classmethod
    def initial(cls, g0: MetricField) -> "PotentialFlowState":
        return cls(t=0.0, phi=ScalarField.zeros(g0.grid), g0=g0, beta0=beta_form(g0), g=g0)


def _reconstruct(g0: MetricField, beta0: Sym2Field, phi: ScalarField, t: float) -> MetricField:
    grid = g0.grid
    comps = g0.components - t * beta0.components
    hess = np.stack(
        [partial2(phi, i, j).values for i, j in sym_pairs(grid.ndim)], axis=-1
    )
    return MetricField(grid, comps + hess)


def _attempt_potential_step(state: PotentialFlowState, dt: float, scheme: str) -> PotentialFlowState:
    # rk2 here is Heun (explicit trapezoid), not the tensor leg's midpoint:
    # with matching schemes the two legs are algebraically the same discrete
    # map (the stencils are linear and telescoping is exact), and the
    # equivalence check would only ever measure rounding noise.
    g0, beta0 = state.g0, state.beta0
    log_det_g0 = np.log(g0.det())

    def rhs_from(g_rec: MetricField) -> np.ndarray:
        return np.log(g_rec.det()) - log_det_g0

    if scheme == "euler":
        k = rhs_from(state.g)
        phi_new = ScalarField(g0.grid, state.phi.values + dt * k)
    else:
        k1 = rhs_from(state.g)
        phi_pred = ScalarField(g0.grid, state.phi.values + dt * k1)
        g_pred = _reconstruct(g0, beta0, phi_pred, state.t + dt)
        k2 = rhs_from(g_pred)
        phi_new = ScalarField(g0.grid, state.phi.values + (0.5 * dt) * (k1 + k2))
    g_new = _reconstruct(g0, beta0, phi_new, state.t + dt)
    return PotentialFlowState(t=state.t + dt, phi=phi_new, g0=g0, beta0=beta0, g=g_new)


def step_potential(state: PotentialFlowState, dt: float, control: StepControl) -> PotentialFlowState:
    """Advance the scalar flow by ``dt``, halving on reconstruction failures."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    node = None
    for _ in range(control.max_halvings + 1):
        if dt < control.dt_min:
            break
        try:
            return _attempt_potential_step(state, dt, control.scheme)
        except NotPositiveDefinite as exc:
            node = exc.node
            dt *= 0.5
    raise FlowBlowup(state.t, node)


def equivalence_check(
    g0: MetricField,
    t_final: float,
    control: StepControl,
    dt: float,
) -> float:
    """Run both legs in lockstep with a fixed dt; sup metric discrepancy.

    The tensor metric is compared against the potential leg's reconstruction
    ``g0 - t beta(g0) + dd(phi)`` at every step; no step halving is allowed,
    since the two legs must see identical times.
    """
    if dt <= 0.0 or t_final <= 0.0:
        raise ValueError("dt and t_final must be positive")
    tensor = FlowState.initial(g0)
    scalar = PotentialFlowState.initial(g0)
    worst = 0.0
    while tensor.t < t_final:
        step = min(dt, t_final - tensor.t)
        try:
            tensor = _attempt_tensor_step(tensor, step, control.scheme)
            scalar = _attempt_potential_step(scalar, step, control.scheme)
        except NotPositiveDefinite as exc:
            raise FlowBlowup(tensor.t, exc.node) from None
        worst = max(worst, float(np.max(np.abs(tensor.g.components - scalar.g.components))))
    return worst


def smoothing_probe(
    g0_rough: MetricField,
    t_samples: Sequence[float],
    control: StepControl,
) -> list[tuple[float, float, float]]:
    """Curvature-decay series (t, sup|Q|_g, t*sup|Q|_g) along the tensor flow.

    A reporting operation: it records the decay of the g-norm of the
    curvature tensor from low-regularity initial data and asserts nothing.
    """
    times = [float(t) for t in t_samples]
    if not times or any(t <= 0 for t in times) or any(
        b <= a for a, b in zip(times, times[1:])
    ):
        raise ValueError("t_samples must be strictly increasing and positive")
    state = FlowState.initial(g0_rough)
    series: list[tuple[float, float, float]] = []
    for target in times:
        while state.t < target:
            dt = min(stable_dt(state.g, control), target - state.t)
            state = step_tensor(state, dt, control)
        q_full = hessian_curvature_from_metric(state.g)
        sup_q = float(np.max(curvature_gnorm(q_full, state.g)))
        series.append((state.t, sup_q, state.t * sup_q))
    return series
