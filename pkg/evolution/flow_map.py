"""
Inverse flow maps Φ_l of a sampled velocity field.

Φ_l solves ∂_t Φ + v·∇Φ = 0 with Φ(l/μ, x) = x, so Φ_l is constant along the
characteristics of v: Φ_l(t, x) = X(l/μ) where dX/ds = v(s, X) and X(t) = x.
Each grid node is carried to the anchor time with RK4; v is evaluated at the
moving points from its spectral block, cubically interpolated in time.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from common.errors import StepUnstable
from common.torus_config import CFL_LIMIT
from common.torus_fields import (
    ScalarField, VectorField2, active_block, c_norm, evaluate_block, highest_active_wavenumber,
    spectral_derivative,
)
from evolution.time_grid import TimeGrid

logger = logging.getLogger(__name__)

_RK4_WEIGHTS = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)
_RK4_NODES = (0.5, 0.5, 1.0)


@dataclass(frozen=True)
class FlowMap:
    """
    Φ_l(t, x) = x + D(t, x) on the samples of the window |μt - l| < 1.

    indices: positions of the window samples in the run's TimeGrid
    displacement: D, with one time slice per window sample
    """
    l: int
    mu: int
    indices: np.ndarray
    times: np.ndarray
    displacement: VectorField2

    @property
    def anchor(self) -> float:
        return self.l / self.mu

    @property
    def grid(self):
        return self.displacement.grid

    def local_index(self, j: int) -> int:
        """Window slice holding run sample j."""
        hits = np.nonzero(self.indices == j)[0]
        if not len(hits):
            raise IndexError(f"Sample {j} lies outside the window of chart {self.l}")
        return int(hits[0])

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        x1, x2 = self.grid.nodes
        return x1 + self.displacement.u1.values, x2 + self.displacement.u2.values

    @cached_property
    def gradient(self) -> tuple[ScalarField, ScalarField, ScalarField, ScalarField]:
        """(∂₁Φ¹, ∂₂Φ¹, ∂₁Φ², ∂₂Φ²) = Id + ∇D, spectrally."""
        D1, D2 = self.displacement.u1, self.displacement.u2
        return (
            spectral_derivative(D1, (1, 0)) + 1.0,
            spectral_derivative(D1, (0, 1)),
            spectral_derivative(D2, (1, 0)),
            spectral_derivative(D2, (0, 1)) + 1.0,
        )

    def jacobian(self) -> np.ndarray:
        g11, g12, g21, g22 = self.gradient
        return g11.values * g22.values - g12.values * g21.values

    def gradient_deviation(self) -> np.ndarray:
        """‖∇Φ_l - Id‖₀ per window sample (Frobenius pointwise, sup in space)."""
        g11, g12, g21, g22 = self.gradient
        sq = (g11.values - 1) ** 2 + g12.values ** 2 + g21.values ** 2 + (g22.values - 1) ** 2
        return np.sqrt(sq).max(axis=(-2, -1))

    def gradient_sup(self) -> float:
        g11, g12, g21, g22 = self.gradient
        sq = g11.values ** 2 + g12.values ** 2 + g21.values ** 2 + g22.values ** 2
        return float(np.sqrt(sq).max())


class _SampledVelocity:
    """v(s, x) at arbitrary points from per-sample spectral blocks."""

    def __init__(self, v: VectorField2, time_grid: TimeGrid):
        K = min(highest_active_wavenumber(v), v.grid.N // 2 - 1)
        self.time_grid = time_grid
        self.ks = np.arange(-K, K + 1)
        self.blocks = []
        for c in v.components:
            _, block = active_block(c)
            # pad to the common bandwidth of both components
            pad = K - (block.shape[-1] - 1) // 2
            if pad:
                widths = [(0, 0)] * (block.ndim - 2) + [(pad, pad), (pad, pad)]
                block = np.pad(block, widths)
            self.blocks.append(block)

    def __call__(self, s: float, x1: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return tuple(
            evaluate_block(self.ks, self.time_grid.sample_at(block, s), x1, x2).real
            for block in self.blocks
        )


def _rk4_to(velocity: _SampledVelocity, t_start: float, t_end: float, x1, x2, n_steps: int):
    h = (t_end - t_start) / n_steps
    s = t_start
    for _ in range(n_steps):
        k1 = velocity(s, x1, x2)
        stages = [k1]
        for node in _RK4_NODES:
            prev = stages[-1]
            stages.append(velocity(s + node * h, x1 + node * h * prev[0], x2 + node * h * prev[1]))
        x1 = x1 + h * sum(w * k[0] for w, k in zip(_RK4_WEIGHTS, stages))
        x2 = x2 + h * sum(w * k[1] for w, k in zip(_RK4_WEIGHTS, stages))
        s += h
    return x1, x2


def stable_step(v: VectorField2) -> float:
    """Largest characteristic step h with h·‖v‖₁ <= CFL_LIMIT."""
    size = c_norm(v, 1)
    return np.inf if size == 0.0 else CFL_LIMIT / size


def solve_inverse_flow(v: VectorField2, time_grid: TimeGrid, l: int, mu: int,
                       step: float | None = None) -> FlowMap:
    """
    Inverse flow map of chart l on the samples with |μt - l| < 1.

    step: characteristic time step; by default the smaller of dt and the
    step that keeps h·‖v‖₁ <= 1/4.

    Raises:
        StepUnstable: an explicit step violates h·‖v‖₁ <= 1/4, or ∇Φ_l degenerates.
    """
    if mu < 1:
        raise ValueError(f"μ must be a positive integer, got {mu}")
    limit = stable_step(v)
    if step is None:
        step = min(time_grid.dt, limit)
    elif step > limit:
        raise StepUnstable(f"Characteristic step {step:.3e} exceeds the stable step {limit:.3e}")

    anchor = l / mu
    indices = time_grid.window((l - 1) / mu, (l + 1) / mu)
    times = time_grid.times[indices]
    velocity = _SampledVelocity(v, time_grid)
    x1, x2 = v.grid.nodes

    d1 = np.zeros((len(indices), v.grid.N, v.grid.N))
    d2 = np.zeros_like(d1)
    for slot, t in enumerate(times):
        span = anchor - t
        if span == 0.0:
            continue
        n_steps = max(1, int(np.ceil(abs(span) / step - 1e-12)))
        y1, y2 = _rk4_to(velocity, t, anchor, x1.ravel(), x2.ravel(), n_steps)
        d1[slot] = y1.reshape(x1.shape) - x1
        d2[slot] = y2.reshape(x2.shape) - x2

    flow = FlowMap(l, mu, indices, times, VectorField2(ScalarField(v.grid, d1), ScalarField(v.grid, d2)))
    if len(indices) and flow.jacobian().min() <= 0.0:
        raise StepUnstable(f"∇Φ_{l} lost invertibility on its window; shorten the window (raise μ)")
    logger.debug(
        "Flow map l=%d: %d samples, step %.3e, max ‖∇Φ - Id‖ = %.3e",
        l, len(indices), step, float(flow.gradient_deviation().max()) if len(indices) else 0.0,
    )
    return flow
