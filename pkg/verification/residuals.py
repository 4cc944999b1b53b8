"""
Pointwise residuals of the Boussinesq–Reynolds system for a sampled state:

    momentum     ∂_t v + div(v⊗v) + ∇p - θe₂ - div R̊
    divergence   div v
    temperature  ∂_t θ + v·∇θ - Δθ

Time derivatives are fourth-order finite differences over the run's samples and
space derivatives are spectral. Nothing here goes through the stress assembly,
so a small momentum residual cross-checks the assembled R̊.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from common.errors import GridError
from common.math_utils import time_derivative
from common.torus_fields import (
    ScalarField, VectorField2, directional_derivative, divergence, divergence_matrix, divergence_tensor,
    grad, l2_norm, laplacian, sup_norm,
)
from evolution.time_grid import TimeGrid
from scheme.state import StageState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResidualNorms:
    """sup over space-time and (∫₀¹‖r(t)‖²_{L²} dt)^{1/2}."""
    sup: float
    l2: float


def residual_norms(r, time_grid: TimeGrid) -> ResidualNorms:
    per_slice = np.asarray(l2_norm(r)) ** 2
    return ResidualNorms(sup_norm(r), float(np.sqrt(simpson(per_slice, dx=time_grid.dt))))


def _time_derivative(f: ScalarField, time_grid: TimeGrid) -> ScalarField:
    return ScalarField(f.grid, time_derivative(f.values, time_grid.dt))


@dataclass(frozen=True)
class ResidualReport:
    q: int
    momentum: ResidualNorms
    divergence: ResidualNorms
    temperature: ResidualNorms

    @property
    def worst(self) -> float:
        return max(self.momentum.sup, self.divergence.sup, self.temperature.sup)

    def rows(self) -> list[dict]:
        return [
            {"q": self.q, "equation": name, "sup": norms.sup, "l2": norms.l2}
            for name, norms in (
                ("momentum", self.momentum), ("divergence", self.divergence), ("temperature", self.temperature),
            )
        ]


def momentum_residual(state: StageState) -> VectorField2:
    v, time_grid = state.v, state.time_grid
    flux = divergence_matrix(v.u1 * v.u1, v.u1 * v.u2, v.u2 * v.u1, v.u2 * v.u2)
    grad_p = grad(state.p)
    div_R = divergence_tensor(state.R)
    return VectorField2(
        _time_derivative(v.u1, time_grid) + flux.u1 + grad_p.u1 - div_R.u1,
        _time_derivative(v.u2, time_grid) + flux.u2 + grad_p.u2 - state.theta - div_R.u2,
    )


def temperature_residual(state: StageState) -> ScalarField:
    theta = state.theta
    return _time_derivative(theta, state.time_grid) + directional_derivative(state.v, theta) - laplacian(theta)


def residual_boussinesq_reynolds(state: StageState) -> ResidualReport:
    time_grid = state.time_grid
    report = ResidualReport(
        q=state.q,
        momentum=residual_norms(momentum_residual(state), time_grid),
        divergence=residual_norms(divergence(state.v), time_grid),
        temperature=residual_norms(temperature_residual(state), time_grid),
    )
    logger.info(
        "Residuals q=%d: momentum %.3e, divergence %.3e, temperature %.3e (sup)",
        state.q, report.momentum.sup, report.divergence.sup, report.temperature.sup,
    )
    return report


def temperature_increment_residual(state: StageState, state_next: StageState) -> tuple[ResidualNorms, float]:
    """
    θ₁ - θ solves ∂_t Θ + v₁·∇Θ - ΔΘ = -(v₁ - v)·∇θ with Θ(0) = 0.
    Returns the norms of the equation residual and sup|Θ(0)|.
    """
    if state.grid != state_next.grid or state.time_grid != state_next.time_grid:
        raise GridError("Consecutive states must share the spatial and temporal grids")
    increment = state_next.theta - state.theta
    source = directional_derivative(state_next.v - state.v, state.theta)
    r = (
        _time_derivative(increment, state.time_grid)
        + directional_derivative(state_next.v, increment)
        - laplacian(increment)
        + source
    )
    return residual_norms(r, state.time_grid), float(np.abs(increment.values[0]).max())
