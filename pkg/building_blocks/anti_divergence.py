import logging

import numpy as np

from common.torus_fields import (
    ScalarField, SymTraceFreeTensor2Field, VectorField2, c_norm, hs_norm, holder_seminorm, sup_norm,
)

logger = logging.getLogger(__name__)


def anti_divergence(v: VectorField2) -> SymTraceFreeTensor2Field:
    """
    Periodic anti-divergence R: symmetric, trace-free, mean-zero, with div R(v) = v - ⨍v.

    Fourier form, for k != 0:
        R(v)_k = (-i v_k⊗k - i k⊗v_k + i (v_k·k) Id) / |k|²
    which gives T11 = i(v2 k2 - v1 k1)/|k|² and T12 = -i(v1 k2 + v2 k1)/|k|².
    Nyquist modes are dropped together with the mean.
    """
    grid = v.grid
    k1, k2 = grid.wavenumbers
    k_sq = np.where(grid.k_squared > 0, grid.k_squared, 1.0)
    keep = (grid.k_squared > 0) & ~grid.nyquist(0) & ~grid.nyquist(1)

    v1, v2 = v.u1.spectrum, v.u2.spectrum
    t11 = np.where(keep, 1j * (v2 * k2 - v1 * k1) / k_sq, 0.0)
    t12 = np.where(keep, -1j * (v1 * k2 + v2 * k1) / k_sq, 0.0)
    real = v.u1.is_real and v.u2.is_real
    return SymTraceFreeTensor2Field(
        ScalarField.from_spectrum(grid, t11, real=real),
        ScalarField.from_spectrum(grid, t12, real=real),
    )


def antidiv_hs_bound_probe(v: VectorField2, s: float) -> tuple[float, float]:
    """(‖R v‖₀, ‖v‖_{Ḣˢ}): the two sides of ‖R v‖₀ <= C ‖v‖_{Ḣˢ}."""
    if s <= 0:
        raise ValueError(f"Sobolev order must be positive, got {s}")
    lhs = sup_norm(anti_divergence(v))
    rhs = float(np.max(hs_norm(v, s)))
    return lhs, rhs


def oscillatory_antidiv_norm(amplitude: ScalarField, k, lam: int, alpha: float, direction=(1.0, 0.0)) -> float:
    """
    ‖R(a(x) cos(λk·x) e)‖_α = ‖·‖₀ + [·]_α for a fixed unit vector e.
    This is the quantity that decays like λ^{α-1}.
    """
    grid = amplitude.grid
    x1, x2 = grid.nodes
    phase = lam * (float(k[0]) * x1 + float(k[1]) * x2)
    carrier = amplitude * np.cos(phase)
    v = VectorField2(carrier * float(direction[0]), carrier * float(direction[1]))
    T = anti_divergence(v)
    if alpha == 0.0:
        return c_norm(T, 0)
    return c_norm(T, 0) + holder_seminorm(T, 0, alpha)
