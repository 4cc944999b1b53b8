"""
Stationary solutions of the 2D Euler equations built from one direction family.

For conjugate-symmetric coefficients a_{-k} = conj(a_k),

    Ψ(x) = λ⁻¹ Σ_k a_k e^{iλk·x},    W = ∇⊥Ψ = Σ_k a_k i k⊥ e^{iλk·x}

are real, and div(W⊗W) = ∇(|W|²/2 + (λΨ)²/2) with ⟨W⊗W⟩ = Σ_k |a_k|² (Id - k⊗k).
"""
import logging
from fractions import Fraction

import numpy as np

from building_blocks.geometric_lemma import Direction, DirectionFamily, negate
from common.errors import GridError, NonPeriodicPhase
from common.torus_fields import Grid, ScalarField, VectorField2, grad_perp

logger = logging.getLogger(__name__)

CONJUGATE_TOL = 1e-14


def integer_wavevector(k, lam: int) -> tuple[int, int]:
    """λk as an integer pair; NonPeriodicPhase if e^{iλk·x} is not periodic on T²."""
    scaled = (Fraction(k[0]) * lam, Fraction(k[1]) * lam)
    if any(c.denominator != 1 for c in scaled):
        raise NonPeriodicPhase(f"λk = ({scaled[0]}, {scaled[1]}) is not an integer wavevector (λ={lam}, k={k})")
    return int(scaled[0]), int(scaled[1])


def check_conjugate_symmetry(coeffs: dict[Direction, complex]) -> None:
    for k, a in coeffs.items():
        partner = coeffs.get(negate(k))
        if partner is None:
            raise ValueError(f"Coefficient set is not symmetric: {negate(k)} missing for {k}")
        if abs(partner - np.conj(a)) > CONJUGATE_TOL * max(1.0, abs(a)):
            raise ValueError(f"a_(-k) must equal conj(a_k) for k = {k}")


def stationary_flow(coeffs: dict[Direction, complex], family: DirectionFamily, lam: int,
                    grid: Grid) -> tuple[VectorField2, ScalarField]:
    """
    Returns (W, Ψ) for coefficients over the family's full set.

    Raises:
        ValueError: coefficients not conjugate-symmetric or not in the family.
        NonPeriodicPhase: some λk is not an integer wavevector.
    """
    allowed = set(family.full_set)
    unknown = [k for k in coeffs if k not in allowed]
    if unknown:
        raise ValueError(f"Directions {unknown} are not members of family {family.index}")
    check_conjugate_symmetry(coeffs)

    spectrum = np.zeros((grid.N, grid.N), dtype=complex)
    for k, a in coeffs.items():
        m1, m2 = integer_wavevector(k, lam)
        if max(abs(m1), abs(m2)) >= grid.N // 2:
            raise GridError(f"Wavevector ({m1}, {m2}) is not resolved on an {grid.N}-grid")
        spectrum[m1 % grid.N, m2 % grid.N] += a / lam
    psi = ScalarField.from_spectrum(grid, spectrum, real=True)
    return grad_perp(psi), psi


def mean_stress(coeffs: dict[Direction, complex]) -> np.ndarray:
    """⟨W⊗W⟩ = Σ_k |a_k|² (Id - k⊗k), summed over the full set."""
    result = np.zeros((2, 2))
    for k, a in coeffs.items():
        kf = np.array([float(k[0]), float(k[1])])
        result += abs(a) ** 2 * (np.eye(2) - np.outer(kf, kf))
    return result


def pair_pressure(k, k_prime) -> float:
    """
    k·k' - 1 for unit vectors: the coefficient in
    div(f₁⊗f₂ + f₂⊗f₁) = ∇((k·k' - 1) e^{i(k+k')·x}) with f = k⊥ e^{ik·x}.
    """
    norm_k = Fraction(k[0]) ** 2 + Fraction(k[1]) ** 2
    norm_kp = Fraction(k_prime[0]) ** 2 + Fraction(k_prime[1]) ** 2
    if norm_k != 1 or norm_kp != 1:
        raise ValueError("pair_pressure expects unit vectors")
    return float(Fraction(k[0]) * Fraction(k_prime[0]) + Fraction(k[1]) * Fraction(k_prime[1]) - 1)
