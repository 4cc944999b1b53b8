from fractions import Fraction

import numpy as np

from building_blocks.geometric_lemma import (
    admissible_radius, direction_family, family_for_chart, gamma_coefficients,
    geometric_constant_c0, sampled_admissible_radius,
)
from common.errors import NonPositiveCoefficient


def test_direction_families():
    print("[Test 1] Direction Families Are Rational, Unit, Symmetric And Disjoint")
    lam0, lam1 = direction_family(0), direction_family(1)
    assert lam1.plus_set[0] == (Fraction(0), Fraction(1))
    for family in (lam0, lam1):
        assert len(family.full_set) == 6
        for k in family.full_set:
            assert k[0] ** 2 + k[1] ** 2 == 1
            assert (-k[0], -k[1]) in family.full_set
    assert not set(lam0.full_set) & set(lam1.full_set)
    assert family_for_chart(4) is lam0 and family_for_chart(7) is lam1
    print("✓ [Test 1] Passed")


def test_c0():
    print("[Test 2] Geometric Constant c0")
    # (3/5, 4/5) + (-4/5, -3/5) = (-1/5, 1/5)
    assert abs(2 * geometric_constant_c0() - np.sqrt(2) / 5) < 1e-15
    print("✓ [Test 2] Passed")


def test_identity_coefficients():
    print("[Test 3] Coefficients At The Identity")
    for index in (0, 1):
        result = gamma_coefficients(np.eye(2), direction_family(index))
        c = sorted(result.gamma_squared)
        assert abs(c[0] - 7 / 32) < 1e-14
        assert abs(c[1] - 25 / 64) < 1e-14 and abs(c[2] - 25 / 64) < 1e-14
    result = gamma_coefficients(np.eye(2), direction_family(0))
    assert abs(result.gamma_squared[0] - 7 / 32) < 1e-14
    assert abs(result.gammas[(Fraction(1), Fraction(0))] - np.sqrt(7 / 32)) < 1e-14
    print("✓ [Test 3] Passed")


def test_degenerate_matrix_rejected():
    print("[Test 4] Rank-One Boundary Case Raises NonPositiveCoefficient")
    try:
        gamma_coefficients(2 * np.outer([1.0, 0.0], [1.0, 0.0]), direction_family(0))
        raise AssertionError("Expected NonPositiveCoefficient")
    except NonPositiveCoefficient as err:
        assert err.coefficients is not None
    print("✓ [Test 4] Passed")


def test_random_reconstruction():
    print("[Test 5] Reconstruction Near The Identity")
    rng = np.random.default_rng(7)
    family = direction_family(0)
    for _ in range(1000):
        e11, e12, e22 = rng.normal(size=3)
        E = np.array([[e11, e12], [e12, e22]])
        R = np.eye(2) + 0.15 * E / np.linalg.norm(E)
        result = gamma_coefficients(R, family)
        assert all(c > 0 for c in result.gamma_squared)
        assert np.linalg.norm(R - result.reconstruct()) <= 1e-12
    print("✓ [Test 5] Passed")


def test_admissible_radius():
    print("[Test 6] Measured Admissible Radius")
    family = direction_family(0)
    exact = admissible_radius(family)
    sampled = sampled_admissible_radius(family, samples=4000)
    assert 0.2 < exact < 0.5
    assert exact <= sampled + 1e-12
    assert sampled < 1.1 * exact
    assert abs(admissible_radius(direction_family(1)) - exact) < 1e-12
    print("✓ [Test 6] Passed")


if __name__ == "__main__":
    test_direction_families()
    test_c0()
    test_identity_coefficients()
    test_degenerate_matrix_rejected()
    test_random_reconstruction()
    test_admissible_radius()
