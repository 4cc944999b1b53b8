from fractions import Fraction

import numpy as np
from numpy.testing import assert_allclose

from building_blocks.geometric_lemma import direction_family, negate
from building_blocks.stationary_flows import mean_stress, pair_pressure, stationary_flow
from common.errors import NonPeriodicPhase
from common.torus_fields import Grid, divergence_matrix, grad, sup_norm

E1 = (Fraction(1), Fraction(0))


def random_coefficients(family, rng):
    coeffs = {}
    for k in family.plus_set:
        a = complex(rng.normal(), rng.normal())
        coeffs[k] = a
        coeffs[negate(k)] = a.conjugate()
    return coeffs


def test_single_mode():
    print("[Test 1] Single Pair At λ = 1 Gives Ψ = cos x1")
    grid = Grid(16)
    W, psi = stationary_flow({E1: 0.5, negate(E1): 0.5}, direction_family(0), 1, grid)
    x1, _ = grid.nodes
    assert_allclose(psi.values, np.cos(x1), atol=1e-14)
    assert_allclose(W.u1.values, 0.0, atol=1e-14)
    assert_allclose(W.u2.values, -np.sin(x1), atol=1e-14)
    print("✓ [Test 1] Passed")


def test_euler_identity():
    print("[Test 2] div(W⊗W) = ∇(|W|²/2 + (λΨ)²/2) For Random Coefficients")
    grid = Grid(32)
    family = direction_family(0)
    lam = 5
    rng = np.random.default_rng(3)
    for _ in range(20):
        coeffs = random_coefficients(family, rng)
        W, psi = stationary_flow(coeffs, family, lam, grid)
        lhs = divergence_matrix(W.u1 * W.u1, W.u1 * W.u2, W.u2 * W.u1, W.u2 * W.u2)
        rhs = grad(W.dot(W) * 0.5 + psi * psi * (lam ** 2 / 2))
        scale = sup_norm(W) ** 2
        assert sup_norm(lhs - rhs) <= 1e-11 * scale
    print("✓ [Test 2] Passed")


def test_mean_stress():
    print("[Test 3] Spatial Mean Of W⊗W")
    grid = Grid(32)
    family = direction_family(1)
    coeffs = random_coefficients(family, np.random.default_rng(5))
    W, _ = stationary_flow(coeffs, family, 5, grid)
    measured = np.array([
        [float((W.u1 * W.u1).mean()), float((W.u1 * W.u2).mean())],
        [float((W.u2 * W.u1).mean()), float((W.u2 * W.u2).mean())],
    ])
    assert_allclose(measured, mean_stress(coeffs), atol=1e-12)
    print("✓ [Test 3] Passed")


def test_empty_and_invalid_sets():
    print("[Test 4] Empty Set, Missing Partner And Non-Periodic Phase")
    grid = Grid(16)
    family = direction_family(0)
    W, psi = stationary_flow({}, family, 5, grid)
    assert sup_norm(W) == 0.0 and sup_norm(psi) == 0.0
    try:
        stationary_flow({E1: 1.0}, family, 5, grid)
        raise AssertionError("Expected ValueError")
    except ValueError:
        pass
    k = family.plus_set[1]
    try:
        stationary_flow({k: 1.0, negate(k): 1.0}, family, 3, grid)
        raise AssertionError("Expected NonPeriodicPhase")
    except NonPeriodicPhase:
        pass
    print("✓ [Test 4] Passed")


def test_pair_pressure():
    print("[Test 5] Pair Pressure Coefficients")
    k = (Fraction(3, 5), Fraction(4, 5))
    assert pair_pressure(k, k) == 0.0
    assert pair_pressure(k, negate(k)) == -2.0
    assert abs(pair_pressure(E1, k) + 0.4) < 1e-15
    try:
        pair_pressure((1, 1), E1)
        raise AssertionError("Expected ValueError")
    except ValueError:
        pass
    print("✓ [Test 5] Passed")


if __name__ == "__main__":
    test_single_mode()
    test_euler_identity()
    test_mean_stress()
    test_empty_and_invalid_sets()
    test_pair_pressure()
