"""
Measured norms of a state and of the increment between consecutive states,
set against the inductive bounds of the iteration.

Each row carries the measured left side, the right side with the constants
pinned for the run (M and η from the stage manifest or the caller, other
constants 1) and whether it is a strict check. Strict rows are identities or
inequalities that hold up to discretization error; the rest are reported as
ratios since their constants are not known.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from common.math_utils import time_derivative
from common.torus_config import (
    ESTIMATE_RTOL, HOLDER_ALPHAS, HOLDER_TIME_SLICES, RESIDUAL_TOL, THETA_IDENTITY_TOL, THETA_MEAN_TOL,
)
from common.torus_fields import (
    c_norm, components, grad, holder_seminorm, hs_norm, l2_norm, pointwise_magnitude, sup_norm,
)
from evolution.transport_diffusion import theta_energy_ledger
from scheme.initial_data import EnergyProfile, theta_profile
from scheme.parameters import ParamSchedule
from scheme.stage_driver import energy_gap
from scheme.state import StageState
from verification.residuals import residual_boussinesq_reynolds, temperature_increment_residual

logger = logging.getLogger(__name__)

INCREMENT_SOBOLEV_ORDER = 0.5


@dataclass(frozen=True)
class EstimateRow:
    name: str
    lhs: float
    rhs: float
    strict: bool = False

    @property
    def ratio(self) -> float:
        if self.rhs > 0.0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs == 0.0 else math.inf

    @property
    def holds(self) -> bool:
        # nan on either side fails
        return bool(self.lhs <= self.rhs * (1 + ESTIMATE_RTOL))


@dataclass(frozen=True)
class EstimateReport:
    q: int
    rows: tuple

    @property
    def strict_holds(self) -> bool:
        return all(row.holds for row in self.rows if row.strict)

    def failures(self) -> list[EstimateRow]:
        return [row for row in self.rows if row.strict and not row.holds]

    def row(self, name: str) -> EstimateRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    def table(self) -> list[dict]:
        return [
            {"q": self.q, "estimate": row.name, "lhs": row.lhs, "rhs": row.rhs,
             "ratio": row.ratio, "holds": row.holds, "strict": row.strict}
            for row in self.rows
        ]


def manifest_constant(state: StageState, key: str) -> float:
    """A constant recorded by the stage that built `state` (nan if it was not recorded)."""
    return float(state.manifest.get(key, math.nan))


def _sup_time_derivative(field, dt: float) -> float:
    derivatives = [time_derivative(c.values, dt) for c in components(field)]
    return float(np.sqrt(sum(np.abs(d) ** 2 for d in derivatives)).max())


def _l_inf_l2(field) -> float:
    return float(np.max(l2_norm(field)))


def _theta0_l2_sq(state: StageState, theta0_coeffs) -> float:
    return float(l2_norm(theta_profile(state.grid, theta0_coeffs)) ** 2)


def state_report(state: StageState, schedule: ParamSchedule, energy: EnergyProfile, theta0_coeffs,
                 residual_tol: float = RESIDUAL_TOL, eta: float | None = None) -> EstimateReport:
    """Checks on a single state: residuals, div v, the θ identities, ‖R̊_q‖₀ and the energy gap."""
    q, time_grid = state.q, state.time_grid
    eta = schedule.eta if eta is None else eta
    delta_next = schedule.delta(q + 1)
    residuals = residual_boussinesq_reynolds(state)
    ledger = theta_energy_ledger(state.theta, time_grid)
    gap = energy_gap(state.v, energy, delta_next, time_grid)
    rows = (
        EstimateRow("momentum residual", residuals.momentum.sup, residual_tol, strict=True),
        EstimateRow("temperature residual", residuals.temperature.sup, residual_tol, strict=True),
        EstimateRow("div v", state.divergence_defect(), 1e-10, strict=True),
        EstimateRow("theta energy identity", ledger.identity_residual(),
                    THETA_IDENTITY_TOL * _theta0_l2_sq(state, theta0_coeffs), strict=True),
        EstimateRow("theta mean", state.theta_mean_defect(), THETA_MEAN_TOL, strict=True),
        EstimateRow("theta maximum principle", sup_norm(state.theta),
                    math.hypot(*theta0_coeffs) * (1 + 1e-6), strict=True),
        EstimateRow("|R_q|_0 <= eta delta_q+1", sup_norm(state.R), eta * delta_next),
        EstimateRow("energy gap <= delta_q+1/4", gap.normalized, delta_next / 4),
    )
    return EstimateReport(q, rows)


def inductive_estimate_report(state: StageState, state_next: StageState, schedule: ParamSchedule,
                              energy: EnergyProfile, theta0_coeffs, M: float | None = None,
                              eta: float | None = None) -> EstimateReport:
    """
    Rows for the step q → q+1: stress bounds on R̊_{q+1}, velocity and pressure
    increments, the temperature increment energy and the time-derivative bounds.
    """
    q, grid, time_grid = state.q, state.grid, state.time_grid
    M = manifest_constant(state_next, "M") if M is None else M
    eta = schedule.eta if eta is None else eta
    delta_next, delta_after_next = schedule.delta(q + 1), schedule.delta(q + 2)
    lam_next = schedule.frequency(q + 1)

    dv = state_next.v - state.v
    dp = state_next.p - state.p
    dtheta = state_next.theta - state.theta
    theta0 = theta_profile(grid, theta0_coeffs)
    theta0_sup = sup_norm(theta0)

    ledger = theta_energy_ledger(dtheta, time_grid)
    increment_energy = float(np.max(2 * ledger.half_energy + ledger.dissipated))
    increment_residual, increment_start = temperature_increment_residual(state, state_next)
    gap = energy_gap(state_next.v, energy, delta_after_next, time_grid)
    # ‖θ⁰‖₂ in the C² sense
    theta0_c2 = c_norm(theta0, 2)

    rows = (
        EstimateRow("|R_q+1|_0 <= eta delta_q+2", sup_norm(state_next.R), eta * delta_after_next),
        EstimateRow("|R_q+1|_1 <= eta delta_q+2 lambda_q+1", c_norm(state_next.R, 1), eta * delta_after_next * lam_next),
        EstimateRow("|v_q+1 - v_q|_0 <= M delta_q+1^1/2", sup_norm(dv), M * delta_next ** 0.5),
        EstimateRow("|v_q+1 - v_q|_1 <= delta_q+1^1/2 lambda_q+1", c_norm(dv, 1), delta_next ** 0.5 * lam_next),
        EstimateRow("|p_q+1 - p_q|_0 <= M^2 delta_q+1", sup_norm(dp), M ** 2 * delta_next),
        EstimateRow("|p_q+1 - p_q|_1 <= M^2 delta_q+1 lambda_q+1", c_norm(dp, 1), M ** 2 * delta_next * lam_next),
        EstimateRow("theta_q+1 energy identity", theta_energy_ledger(state_next.theta, time_grid).identity_residual(),
                    THETA_IDENTITY_TOL * _theta0_l2_sq(state, theta0_coeffs), strict=True),
        EstimateRow("theta increment energy <= 4 M^2 |theta0|_0^2 delta_q+1", increment_energy,
                    4 * M ** 2 * theta0_sup ** 2 * delta_next),
        EstimateRow("theta increment energy <= 4 |theta0|_0^2 |v_q+1 - v_q|_0^2", increment_energy,
                    4 * theta0_sup ** 2 * sup_norm(dv) ** 2, strict=True),
        EstimateRow("theta increment starts at zero", increment_start, THETA_MEAN_TOL, strict=True),
        EstimateRow("theta increment equation residual", increment_residual.sup, RESIDUAL_TOL),
        EstimateRow("energy gap <= delta_q+2/4", gap.normalized, delta_after_next / 4),
        EstimateRow("|d_t(v_q+1 - v_q)|_0 <= delta_q+1^1/2 lambda_q+1", _sup_time_derivative(dv, time_grid.dt),
                    delta_next ** 0.5 * lam_next),
        EstimateRow("|d_t(p_q+1 - p_q)|_0 <= delta_q+1 lambda_q+1", _sup_time_derivative(dp, time_grid.dt),
                    delta_next * lam_next),
        EstimateRow("|grad theta_q+1|_LinfL2 <= |v_q+1|_0^2 |theta0|_2", _l_inf_l2(grad(state_next.theta)),
                    sup_norm(state_next.v) ** 2 * theta0_c2),
        EstimateRow("|grad(theta_q+1 - theta_q)|_LinfL2 <= delta_q+1^1/2", _l_inf_l2(grad(dtheta)),
                    delta_next ** 0.5),
        EstimateRow("|theta_q+1 - theta_q|_LinfH^1/2 <= delta_q+1^1/2 lambda_q+1^-1/2",
                    float(np.max(hs_norm(dtheta, INCREMENT_SOBOLEV_ORDER))),
                    delta_next ** 0.5 * lam_next ** (INCREMENT_SOBOLEV_ORDER - 1)),
    )
    report = EstimateReport(q, rows)
    logger.info(
        "Inductive estimates q=%d -> %d: %d rows, strict %s",
        q, q + 1, len(rows), "pass" if report.strict_holds else "FAIL",
    )
    return report


def phase_rows(stage_report) -> list[dict]:
    """Per-chart flow-map estimates and the convolution estimates of one stage."""
    params = stage_report.params
    scale = params.delta ** 0.5 * params.lambda_q / params.mu
    rows = [
        {"q": params.q, "quantity": f"chart {chart.l} |grad Phi|_0", "value": chart.flow.gradient_sup(), "bound": math.nan}
        for chart in stage_report.bundle.charts
    ]
    rows += [
        {"q": params.q, "quantity": f"chart {chart.l} |grad Phi - Id|_0",
         "value": float(np.max(chart.flow.gradient_deviation())), "bound": scale}
        for chart in stage_report.bundle.charts
    ]
    rows += [
        {"q": params.q, "quantity": row["quantity"], "value": row["value"], "bound": math.nan}
        for row in stage_report.convolution.rows()
    ]
    return rows


def holder_norm(field, alpha: float, time_slices: int = HOLDER_TIME_SLICES) -> float:
    """‖f‖_α = ‖f‖₀ + [f]_α on at most `time_slices` evenly spaced samples; ‖f‖₀ for α = 0."""
    if alpha == 0.0:
        return sup_norm(field)
    n_t = pointwise_magnitude(field).shape[0]
    stride = max(1, math.ceil(n_t / time_slices))
    return sup_norm(field) + holder_seminorm(field[::stride], 0, alpha)


def holder_report(states: list[StageState], schedule: ParamSchedule, alphas=HOLDER_ALPHAS) -> list[dict]:
    """
    ‖v_{q+1} - v_q‖_α and ‖p_{q+1} - p_q‖_α for consecutive states, next to the
    interpolation bounds 2M a^{(-1/2+αbc)b^{q+1}} and 2M a^{(-1+αbc)b^{q+1}} and
    their counterparts 2Mδ_{q+1}^{1/2}λ_{q+1}^α, 2Mδ_{q+1}λ_{q+1}^α at the λ actually used.
    """
    rows = []
    a, b, c = schedule.a, schedule.b, schedule.c
    for state, state_next in zip(states, states[1:]):
        q = state.q
        M = manifest_constant(state_next, "M")
        dv, dp = state_next.v - state.v, state_next.p - state.p
        delta_next, lam_next = schedule.delta(q + 1), schedule.frequency(q + 1)
        for alpha in alphas:
            rows.append({
                "q": q,
                "alpha": alpha,
                "velocity_increment": holder_norm(dv, alpha),
                "velocity_bound_formula": 2 * M * a ** ((-0.5 + alpha * b * c) * b ** (q + 1)),
                "velocity_bound_used": 2 * M * delta_next ** 0.5 * lam_next ** alpha,
                "pressure_increment": holder_norm(dp, alpha),
                "pressure_bound_formula": 2 * M * a ** ((-1.0 + alpha * b * c) * b ** (q + 1)),
                "pressure_bound_used": 2 * M * delta_next * lam_next ** alpha,
            })
    logger.info("Hölder report over %d states: %d rows", len(states), len(rows))
    return rows
