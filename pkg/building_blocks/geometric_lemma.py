import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.linalg import solve

from common.errors import NonPositiveCoefficient
from common.torus_config import LAMBDA0_PLUS, PHASE_DENOMINATOR

logger = logging.getLogger(__name__)

Direction = tuple[Fraction, Fraction]


def rotate_quarter(k: Direction) -> Direction:
    """Counter-clockwise rotation by pi/2: k -> k⊥ = (-k2, k1)."""
    return (-k[1], k[0])


def negate(k: Direction) -> Direction:
    return (-k[0], -k[1])


@dataclass(frozen=True)
class DirectionFamily:
    """
    One of the two rational direction families used by the geometric lemma.

    Λ₀⁺ = {e₁, (3/5, 4/5), (3/5, -4/5)} and Λ₁⁺ is its rotation by pi/2.
    The full family Λ = Λ⁺ ∪ (-Λ⁺) is symmetric under negation.
    """
    index: int
    plus_set: tuple[Direction, ...]

    def __post_init__(self):
        for k in self.plus_set:
            if k[0] ** 2 + k[1] ** 2 != 1:
                raise ValueError(f"Direction {k} is not a unit vector")
            if any(PHASE_DENOMINATOR % Fraction(c).denominator for c in k):
                raise ValueError(f"Direction {k} has a denominator not dividing {PHASE_DENOMINATOR}")
        basis = np.array([outer_components(k) for k in self.plus_set])
        if np.linalg.matrix_rank(basis) != 3:
            raise ValueError("k⊗k over the family must span the symmetric 2x2 matrices")

    @property
    def full_set(self) -> tuple[Direction, ...]:
        return self.plus_set + tuple(negate(k) for k in self.plus_set)

    @property
    def vectors(self) -> np.ndarray:
        """Float copy of plus_set, shape (3, 2)."""
        return np.array([[float(c) for c in k] for k in self.plus_set])


def outer_components(k) -> tuple[float, float, float]:
    """(k1², k1k2, k2²): the independent entries of k⊗k."""
    k1, k2 = float(k[0]), float(k[1])
    return k1 * k1, k1 * k2, k2 * k2


@lru_cache(maxsize=2)
def direction_family(index: int) -> DirectionFamily:
    if index == 0:
        return DirectionFamily(0, LAMBDA0_PLUS)
    if index == 1:
        return DirectionFamily(1, tuple(rotate_quarter(k) for k in LAMBDA0_PLUS))
    raise ValueError(f"Direction family index must be 0 or 1, got {index}")


def family_for_chart(l: int) -> DirectionFamily:
    """Λ_(l) = Λ_{l mod 2}: adjacent charts never share a direction."""
    return direction_family(l % 2)


def geometric_constant_c0() -> float:
    """c₀ with |k + k'| >= 2c₀ for all k, k' in Λ₀ ∪ Λ₁ with k != -k'."""
    union = direction_family(0).full_set + direction_family(1).full_set
    smallest = min(
        float(np.hypot(float(k[0] + kk[0]), float(k[1] + kk[1])))
        for k, kk in product(union, repeat=2)
        if k != negate(kk)
    )
    return smallest / 2


def _system_matrix(family: DirectionFamily) -> np.ndarray:
    # columns: 2 k⊗k written as (R11, R12, R22)
    return 2.0 * np.array([outer_components(k) for k in family.plus_set]).T


def solve_coefficients(r11, r12, r22, family: DirectionFamily) -> np.ndarray:
    """
    Solve R = 2 Σ_k c_k k⊗k for c_k = γ_k², pointwise over arrays of entries.
    Returns an array of shape (3,) + shape of the entries.
    """
    r11, r12, r22 = np.broadcast_arrays(np.asarray(r11, float), np.asarray(r12, float), np.asarray(r22, float))
    rhs = np.stack([r11.ravel(), r12.ravel(), r22.ravel()])
    return solve(_system_matrix(family), rhs).reshape((3,) + r11.shape)


@dataclass(frozen=True)
class GammaCoefficients:
    family: DirectionFamily
    gamma_squared: tuple[float, float, float]
    epsilon0: float

    @property
    def gammas(self) -> dict[Direction, float]:
        return {k: float(np.sqrt(c)) for k, c in zip(self.family.plus_set, self.gamma_squared)}

    def reconstruct(self) -> np.ndarray:
        R = np.zeros((2, 2))
        for k, c in zip(self.family.vectors, self.gamma_squared):
            R += 2 * c * np.outer(k, k)
        return R


def gamma_coefficients(R, family: DirectionFamily) -> GammaCoefficients:
    """
    Geometric lemma: R = 2 Σ_{k∈Λ⁺} γ_k² k⊗k with every γ_k² > 0.

    Raises:
        NonPositiveCoefficient: R lies outside the admissible neighbourhood of Id.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (2, 2) or abs(R[0, 1] - R[1, 0]) > 1e-14 * max(1.0, np.abs(R).max()):
        raise ValueError("R must be a symmetric 2x2 matrix")
    c = solve_coefficients(R[0, 0], R[0, 1], R[1, 1], family)
    # c_k within roundoff of 0 counts as a boundary case
    if np.any(c <= 1e-12 * np.abs(c).max()):
        raise NonPositiveCoefficient(
            f"Geometric lemma coefficients {c.tolist()} are not all positive", coefficients=c
        )
    return GammaCoefficients(family, tuple(float(x) for x in c), admissible_radius(family))


@lru_cache(maxsize=2)
def _admissible_radius(index: int) -> float:
    family = direction_family(index)
    A_inv = np.linalg.inv(_system_matrix(family))
    at_identity = A_inv @ np.array([1.0, 0.0, 1.0])
    # c_k(Id + E) = c_k(Id) + g_k . (E11, E12, E22); Frobenius norm counts E12 twice
    dual_norms = np.sqrt(A_inv[:, 0] ** 2 + A_inv[:, 1] ** 2 / 2 + A_inv[:, 2] ** 2)
    radius = float(np.min(at_identity / dual_norms))
    logger.debug("Admissible Frobenius radius around Id for family %d: %.6f", index, radius)
    return radius


def admissible_radius(family: DirectionFamily) -> float:
    """
    ε₀: the largest Frobenius radius with every γ_k²(R) > 0 for ‖R - Id‖_F < ε₀.
    Exact because the coefficients depend linearly on R.
    """
    return _admissible_radius(family.index)


def sampled_admissible_radius(family: DirectionFamily, samples: int = 2000, seed: int = 0) -> float:
    """Sampling estimate of ε₀ (an upper bound of the exact radius, converging from above)."""
    rng = np.random.default_rng(seed)
    A_inv = np.linalg.inv(_system_matrix(family))
    at_identity = A_inv @ np.array([1.0, 0.0, 1.0])
    best = np.inf
    for _ in range(samples):
        e11, e12, e22 = rng.normal(size=3)
        scale = np.sqrt(e11 ** 2 + 2 * e12 ** 2 + e22 ** 2)
        slope = A_inv @ (np.array([e11, e12, e22]) / scale)
        shrinking = slope < 0
        if np.any(shrinking):
            best = min(best, float(np.min(at_identity[shrinking] / -slope[shrinking])))
    return best
