"""
Prescribed energy profile and the explicit starting tuple of the iteration.

With A(t) = √((1-δ₁)e(t)/(2π²)) and θ⁰ = s sin x₂ + c cos x₂:

    v₀ = (A(t) sin λ₀x₂, 0)
    R̊₀ = -A'(t) cos(λ₀x₂)/λ₀ (e₁⊗e₂ + e₂⊗e₁),   A' = √(1-δ₁) e'/√(8π²e)
    θ₀ = e^{-t} θ⁰
    p₀ = e^{-t} ∫₀^{x₂} θ⁰ = e^{-t} (s(1 - cos x₂) + c sin x₂)

v₀ is a shear, so v₀·∇v₀ = 0 and v₀·∇θ₀ = 0; ∂_t v₀ = div R̊₀ and ∇p₀ = θ₀e₂.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from common.errors import Unresolved
from common.torus_fields import Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2
from evolution.time_grid import TimeGrid
from scheme.state import StageState

logger = logging.getLogger(__name__)

_DENSE_SAMPLES = 4097


@dataclass(frozen=True)
class EnergyProfile:
    """e(t) = Σ_n coeffs[n] cos(nπt) on [0, 1]."""
    coeffs: tuple

    def __post_init__(self):
        if not len(self.coeffs):
            raise ValueError("An energy profile needs at least one coefficient")
        lowest = float(self(np.linspace(0.0, 1.0, _DENSE_SAMPLES)).min())
        if lowest <= 0.0:
            raise ValueError(f"The energy profile must stay positive on [0, 1], min e = {lowest:.4e}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return sum(c * np.cos(n * np.pi * t) for n, c in enumerate(self.coeffs))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return sum(-c * n * np.pi * np.sin(n * np.pi * t) for n, c in enumerate(self.coeffs))

    @property
    def minimum(self) -> float:
        return float(self(np.linspace(0.0, 1.0, _DENSE_SAMPLES)).min())

    @property
    def maximum(self) -> float:
        return float(self(np.linspace(0.0, 1.0, _DENSE_SAMPLES)).max())

    def rate(self) -> float:
        """max |e'|/√e over [0, 1]."""
        t = np.linspace(0.0, 1.0, _DENSE_SAMPLES)
        return float(np.max(np.abs(self.derivative(t)) / np.sqrt(self(t))))


def theta_profile(grid: Grid, theta0_coeffs: tuple[float, float]) -> ScalarField:
    """θ⁰ = s sin x₂ + c cos x₂."""
    s, c = theta0_coeffs
    return ScalarField.from_function(grid, lambda x1, x2: s * np.sin(x2) + c * np.cos(x2))


def initial_stress_bound(energy: EnergyProfile, lambda0: int, delta1: float) -> float:
    """‖R̊₀‖₀ = √(1-δ₁) max|e'|/√e / (λ₀√(8π²))."""
    return math.sqrt(1 - delta1) * energy.rate() / (lambda0 * math.sqrt(8 * math.pi ** 2))


def minimal_lambda0(energy: EnergyProfile, eta: float, delta1: float) -> int:
    """Smallest λ₀ with ‖R̊₀‖₀ <= ηδ₁."""
    needed = initial_stress_bound(energy, 1, delta1) / (eta * delta1)
    return max(1, math.ceil(needed - 1e-12))


def initial_tuple(energy: EnergyProfile, theta0_coeffs: tuple[float, float], lambda0: int, grid: Grid,
                  time_grid: TimeGrid, delta1: float) -> StageState:
    """
    Raises:
        Unresolved: λ₀ is not below the dealiasing cutoff N/3.
        ValueError: λ₀ is not a positive integer or δ₁ is outside (0, 1).
    """
    if int(lambda0) != lambda0 or lambda0 < 1:
        raise ValueError(f"λ₀ must be a positive integer, got {lambda0}")
    if not 0.0 < delta1 < 1.0:
        raise ValueError(f"δ₁ must lie in (0, 1), got {delta1}")
    if 3 * lambda0 >= grid.N:
        raise Unresolved(f"λ₀={lambda0} is not resolved below N/3 on an N={grid.N} grid")

    t = time_grid.times
    e, e_prime = energy(t), energy.derivative(t)
    amplitude = np.sqrt((1 - delta1) * e / (2 * np.pi ** 2))
    amplitude_prime = np.sqrt(1 - delta1) * e_prime / np.sqrt(8 * np.pi ** 2 * e)
    decay = np.exp(-t)

    _, x2 = grid.nodes
    shear = ScalarField(grid, np.sin(lambda0 * x2))
    off_diagonal = ScalarField(grid, -np.cos(lambda0 * x2) / lambda0)
    theta0 = theta_profile(grid, theta0_coeffs)
    s, c = theta0_coeffs
    primitive = ScalarField(grid, s * (1 - np.cos(x2)) + c * np.sin(x2))

    v = VectorField2(shear.scale_time(amplitude), ScalarField.zeros(grid, (time_grid.n_t,)))
    R = SymTraceFreeTensor2Field(ScalarField.zeros(grid, (time_grid.n_t,)), off_diagonal.scale_time(amplitude_prime))
    theta = ScalarField(grid, np.broadcast_to(theta0.values, (time_grid.n_t,) + theta0.values.shape)).scale_time(decay)
    p = ScalarField(grid, np.broadcast_to(primitive.values, theta.values.shape)).scale_time(decay)

    logger.info(
        "Initial tuple: λ₀=%d, N=%d, n_t=%d, ‖R̊₀‖₀=%.3e",
        lambda0, grid.N, time_grid.n_t, initial_stress_bound(energy, lambda0, delta1),
    )
    return StageState(0, time_grid, v, p, theta, R, {"lambda_0": lambda0, "delta_1": delta1})
