import numpy as np
from numpy.testing import assert_allclose

from common.errors import GridError
from common.torus_fields import (
    Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2,
    c_seminorm, divergence, divergence_tensor, evaluate_at, grad_perp, holder_seminorm,
    l2_norm, l2_norm_spectral, norms, spectral_derivative, sup_norm,
)


def random_band_limited(grid, K=4, seed=0):
    rng = np.random.default_rng(seed)
    x1, x2 = grid.nodes
    values = np.zeros_like(x1)
    for k1 in range(-K, K + 1):
        for k2 in range(-K, K + 1):
            amp, phase = rng.normal(), rng.uniform(0, 2 * np.pi)
            values += amp * np.cos(k1 * x1 + k2 * x2 + phase)
    return ScalarField(grid, values)


def test_grid_validation():
    print("[Test 1] Grid Rejects Odd Or Tiny Sizes")
    for bad in (7, 6, 0):
        try:
            Grid(bad)
            raise AssertionError(f"Expected GridError for N={bad}")
        except GridError:
            pass
    grid = Grid(16)
    assert abs(grid.spacing - 2 * np.pi / 16) < 1e-15
    print("✓ [Test 1] Passed")


def test_single_mode_derivatives():
    print("[Test 2] Spectral Derivatives Of Single Modes")
    grid = Grid(32)
    f = ScalarField.from_function(grid, lambda x1, x2: np.sin(x2))
    d2 = spectral_derivative(f, (0, 1))
    assert_allclose(d2.values, np.cos(grid.nodes[1]), atol=1e-13)

    const = ScalarField.constant(grid, 3.0)
    assert sup_norm(spectral_derivative(const, (1, 0))) < 1e-14

    g = ScalarField.from_function(grid, lambda x1, x2: np.cos(3 * x1 + 4 * x2))
    d12 = spectral_derivative(g, (1, 1))
    expected = -12 * np.cos(3 * grid.nodes[0] + 4 * grid.nodes[1])
    assert_allclose(d12.values, expected, atol=1e-11)
    print("✓ [Test 2] Passed")


def test_negative_multi_index_rejected():
    print("[Test 3] Negative Multi-Index Raises GridError")
    grid = Grid(16)
    f = ScalarField.constant(grid, 1.0)
    try:
        spectral_derivative(f, (-1, 0))
        raise AssertionError("Expected GridError")
    except GridError:
        print("✓ [Test 3] Passed")


def test_grad_perp_and_divergence():
    print("[Test 4] grad_perp Is Divergence-Free")
    grid = Grid(32)
    f = ScalarField.from_function(grid, lambda x1, x2: np.sin(x2))
    w = grad_perp(f)
    assert_allclose(w.u1.values, -np.cos(grid.nodes[1]), atol=1e-13)
    assert sup_norm(w.u2) < 1e-13

    g = random_band_limited(grid)
    div = divergence(grad_perp(g))
    assert sup_norm(div) <= 1e-12 * sup_norm(grad_perp(g))

    # derivatives commute in spectral space
    d12 = spectral_derivative(spectral_derivative(g, (1, 0)), (0, 1))
    d21 = spectral_derivative(spectral_derivative(g, (0, 1)), (1, 0))
    assert_allclose(d12.values, d21.values, atol=1e-12 * sup_norm(d12))
    print("✓ [Test 4] Passed")


def test_divergence_tensor():
    print("[Test 5] Row-Wise Divergence Of A Trace-Free Tensor")
    grid = Grid(32)
    t12 = ScalarField.from_function(grid, lambda x1, x2: -np.cos(x2))
    T = SymTraceFreeTensor2Field(ScalarField.zeros(grid), t12)
    div = divergence_tensor(T)
    assert_allclose(div.u1.values, np.sin(grid.nodes[1]), atol=1e-13)
    assert sup_norm(div.u2) < 1e-13

    const = SymTraceFreeTensor2Field(ScalarField.constant(grid, 2.0), ScalarField.constant(grid, -1.0))
    assert sup_norm(divergence_tensor(const)) < 1e-14

    a, b = random_band_limited(grid, seed=1), random_band_limited(grid, seed=2)
    div = divergence_tensor(SymTraceFreeTensor2Field(a, b))
    expected = spectral_derivative(a, (1, 0)).values + spectral_derivative(b, (0, 1)).values
    assert_allclose(div.u1.values, expected, atol=1e-13 * np.abs(expected).max())
    assert np.abs(SymTraceFreeTensor2Field(a, b).trace()).max() == 0.0
    print("✓ [Test 5] Passed")


def test_norms_of_sine():
    print("[Test 6] sup, L2 and Sobolev Norms")
    grid = Grid(32)
    f = ScalarField.from_function(grid, lambda x1, x2: np.sin(x2))
    result = norms(f, s=1.0)
    assert abs(result.sup - 1.0) < 1e-14
    assert abs(result.l2 - np.sqrt(2 * np.pi ** 2)) < 1e-12
    assert abs(result.c[1] - 2.0) < 1e-12  # sup + sup|cos|

    const = ScalarField.constant(grid, 5.0)
    assert norms(const, s=0.5).hs == 0.0

    try:
        norms(f, s=-1.0)
        raise AssertionError("Expected ValueError for negative Sobolev order")
    except ValueError:
        pass
    print("✓ [Test 6] Passed")


def test_round_trip_and_parseval():
    print("[Test 7] Transform Round Trip And Parseval")
    grid = Grid(64)
    f = random_band_limited(grid, K=10, seed=3)
    back = ScalarField.from_spectrum(grid, f.spectrum)
    assert sup_norm(back - f) <= 1e-12 * sup_norm(f)
    assert abs(l2_norm(f) - l2_norm_spectral(f)) <= 1e-12 * l2_norm(f)
    print("✓ [Test 7] Passed")


def test_holder_seminorm():
    print("[Test 8] Hoelder Seminorm Estimates")
    grid = Grid(64)
    lam = 4
    const = ScalarField.constant(grid, 2.0)
    assert holder_seminorm(const, 0, 0.5) == 0.0

    f = ScalarField.from_function(grid, lambda x1, x2: np.sin(lam * x2))
    assert abs(holder_seminorm(f, 0, 0.0) - 1.0) < 1e-12
    assert abs(holder_seminorm(f, 1, 0.0) - lam) < 1e-10
    assert abs(c_seminorm(f, 1) - lam) < 1e-10

    g = ScalarField.from_function(grid, lambda x1, x2: np.sin(x2))
    half = holder_seminorm(g, 0, 0.5)
    # |sin a - sin b| <= min(2, |a - b|), so the quotient never exceeds sqrt(2)
    assert 0.0 < half <= np.sqrt(2) + 1e-12
    assert holder_seminorm(f, 0, 0.5) > half

    try:
        holder_seminorm(f, 0, 1.0)
        raise AssertionError("Expected ValueError for alpha = 1")
    except ValueError:
        pass
    print("✓ [Test 8] Passed")


def test_point_evaluation_and_immutability():
    print("[Test 9] Point Evaluation And Immutable Values")
    grid = Grid(32)
    f = ScalarField.from_function(grid, lambda x1, x2: np.sin(3 * x1) * np.cos(2 * x2))
    rng = np.random.default_rng(4)
    x1, x2 = rng.uniform(-1, 7, 50), rng.uniform(-1, 7, 50)
    assert_allclose(evaluate_at(f, x1, x2), np.sin(3 * x1) * np.cos(2 * x2), atol=1e-13)

    try:
        f.values[0, 0] = 1.0
        raise AssertionError("Field values should be read-only")
    except ValueError:
        pass

    v = VectorField2(f, f)
    w = v * 2.0 - v
    assert_allclose(w.u1.values, f.values)
    print("✓ [Test 9] Passed")


if __name__ == "__main__":
    test_grid_validation()
    test_single_mode_derivatives()
    test_negative_multi_index_rejected()
    test_grad_perp_and_divergence()
    test_divergence_tensor()
    test_norms_of_sine()
    test_round_trip_and_parseval()
    test_holder_seminorm()
    test_point_evaluation_and_immutability()
