"""
Space-time mollification f_ℓ = f * ψ_ℓ on T² × [0, 1].

ψ_ℓ(t, x) = φ(|x|/ℓ) φ(|t|/ℓ) with φ(r) = e^{-1/(1-r²)} on r < 1: a smooth radial bump
in space times a smooth bump in time, each normalised to unit mass on the grid.
The spatial factor is a Fourier multiplier; the temporal factor is a banded matrix
whose rows are renormalised over the samples inside [0, 1].
"""
import logging
from dataclasses import dataclass

import numpy as np

from common.errors import KernelUnresolved
from common.torus_fields import (
    AnyField, Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2, c_seminorm, sup_norm,
)
from evolution.time_grid import TimeGrid

logger = logging.getLogger(__name__)


def _bump(r: np.ndarray) -> np.ndarray:
    inside = r < 1.0
    safe = np.where(inside, r, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe ** 2)), 0.0)


def spatial_multiplier(grid: Grid, ell: float) -> np.ndarray:
    """Fourier multiplier of the unit-mass spatial kernel of radius ℓ."""
    # periodic distance to the origin
    offsets = np.minimum(np.arange(grid.N), grid.N - np.arange(grid.N)) * grid.spacing
    d1, d2 = np.meshgrid(offsets, offsets, indexing="ij")
    kernel = _bump(np.hypot(d1, d2) / ell)
    kernel /= kernel.sum()
    return np.fft.fft2(kernel).real


def temporal_weights(time_grid: TimeGrid, ell: float) -> np.ndarray:
    """Row j holds the weights of the samples averaged into sample j."""
    t = time_grid.times
    weights = _bump(np.abs(t[:, None] - t[None, :]) / ell)
    return weights / weights.sum(axis=1, keepdims=True)


def check_resolved(grid: Grid, time_grid: TimeGrid, ell: float) -> None:
    resolution = 2 * max(grid.spacing, time_grid.dt)
    if ell < resolution:
        raise KernelUnresolved(
            f"Mollification radius ℓ={ell:.4g} is below twice the grid resolution ({resolution:.4g})"
        )


def _mollify_scalar(f: ScalarField, multiplier: np.ndarray, weights: np.ndarray | None) -> ScalarField:
    smoothed = ScalarField.from_spectrum(f.grid, f.spectrum * multiplier, real=f.is_real)
    if weights is None or not smoothed.time_shape:
        return smoothed
    return ScalarField(f.grid, np.tensordot(weights, smoothed.values, axes=(1, 0)))


def mollify_field(field: AnyField, ell: float, time_grid: TimeGrid) -> AnyField:
    """
    Raises:
        KernelUnresolved: ℓ < 2·max(h, dt).
    """
    grid = field.grid
    check_resolved(grid, time_grid, ell)
    multiplier = spatial_multiplier(grid, ell)
    weights = temporal_weights(time_grid, ell)
    if isinstance(field, ScalarField):
        return _mollify_scalar(field, multiplier, weights)
    parts = [_mollify_scalar(c, multiplier, weights) for c in field.components]
    return type(field)(*parts)


def mollify(v: VectorField2, R: SymTraceFreeTensor2Field, ell: float,
            time_grid: TimeGrid) -> tuple[VectorField2, SymTraceFreeTensor2Field]:
    """(v_ℓ, R̊_ℓ) = (v * ψ_ℓ, R̊ * ψ_ℓ)."""
    v_ell = mollify_field(v, ell, time_grid)
    R_ell = mollify_field(R, ell, time_grid)
    logger.debug("Mollified at ℓ=%.4g: ‖v - v_ℓ‖₀=%.3e, ‖R - R_ℓ‖₀=%.3e", ell, sup_norm(v - v_ell), sup_norm(R - R_ell))
    return v_ell, R_ell


@dataclass(frozen=True)
class ConvolutionReport:
    ell: float
    velocity_gap: float
    stress_gap: float
    velocity_c1: float
    velocity_c2_scaled: float

    def rows(self) -> list[dict]:
        return [
            {"quantity": "|v - v_ell|_0", "value": self.velocity_gap},
            {"quantity": "|R - R_ell|_0", "value": self.stress_gap},
            {"quantity": "|v_ell|_1", "value": self.velocity_c1},
            {"quantity": "|v_ell|_2 * ell", "value": self.velocity_c2_scaled},
        ]


def convolution_report(v: VectorField2, v_ell: VectorField2, R: SymTraceFreeTensor2Field,
                       R_ell: SymTraceFreeTensor2Field, ell: float) -> ConvolutionReport:
    return ConvolutionReport(
        ell=ell,
        velocity_gap=sup_norm(v - v_ell),
        stress_gap=sup_norm(R - R_ell),
        velocity_c1=sup_norm(v_ell) + c_seminorm(v_ell, 1),
        velocity_c2_scaled=(sup_norm(v_ell) + c_seminorm(v_ell, 1) + c_seminorm(v_ell, 2)) * ell,
    )
