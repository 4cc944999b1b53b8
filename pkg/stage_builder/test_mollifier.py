import numpy as np
from numpy.testing import assert_allclose

from common.errors import KernelUnresolved
from common.torus_fields import (
    Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2, c_seminorm, sup_norm,
)
from evolution.time_grid import TimeGrid
from stage_builder.mollifier import (
    convolution_report, mollify, mollify_field, spatial_multiplier, temporal_weights,
)


def test_constants_unchanged():
    print("[Test 1] Constants Are Fixed By The Mollifier")
    grid, time_grid = Grid(64), TimeGrid(33)
    f = ScalarField(grid, np.full((33, 64, 64), 2.5))
    assert_allclose(mollify_field(f, 0.3, time_grid).values, 2.5, atol=1e-13)
    assert abs(spatial_multiplier(grid, 0.3)[0, 0] - 1.0) < 1e-14
    assert_allclose(temporal_weights(time_grid, 0.3).sum(axis=1), 1.0, atol=1e-14)
    print("✓ [Test 1] Passed")


def test_spatial_gap():
    print("[Test 2] ‖f - f_ℓ‖₀ <= ℓ [f]₁ And Gradients Contract")
    grid, time_grid = Grid(64), TimeGrid(33)
    f = ScalarField.from_function(grid, lambda x1, x2: np.sin(x1 + 2 * x2))
    for ell in (0.25, 0.5, 1.0):
        f_ell = mollify_field(f, ell, time_grid)
        gap = sup_norm(f - f_ell)
        assert 0.0 < gap <= ell * c_seminorm(f, 1)
        assert c_seminorm(f_ell, 1) <= c_seminorm(f, 1) + 1e-13
        assert c_seminorm(f_ell, 2) <= c_seminorm(f, 2) + 1e-13
    print("✓ [Test 2] Passed")


def test_temporal_linear_preserved():
    print("[Test 3] Interior Samples Keep Linear Time Dependence")
    grid, time_grid = Grid(64), TimeGrid(33)
    ell = 0.25
    x1, _ = grid.nodes
    static = ScalarField(grid, np.cos(x1))
    f = ScalarField(grid, time_grid.times[:, None, None] * np.cos(x1))
    f_ell = mollify_field(f, ell, time_grid)
    smoothed = mollify_field(static, ell, time_grid).values
    interior = (time_grid.times >= ell) & (time_grid.times <= 1 - ell)
    expected = time_grid.times[interior, None, None] * smoothed
    assert_allclose(f_ell.values[interior], expected, atol=1e-13)
    print("✓ [Test 3] Passed")


def test_unresolved_kernel():
    print("[Test 4] Radius Below Twice The Resolution Raises KernelUnresolved")
    grid, time_grid = Grid(32), TimeGrid(9)
    f = ScalarField.zeros(grid, (9,))
    for ell in (0.3, 0.2):
        try:
            mollify_field(f, ell, time_grid)
            raise AssertionError("Expected KernelUnresolved")
        except KernelUnresolved:
            pass
    mollify_field(f, 0.5, time_grid)
    print("✓ [Test 4] Passed")


def test_mollify_pair_and_report():
    print("[Test 5] Velocity And Stress Mollified Together")
    grid, time_grid = Grid(64), TimeGrid(33)
    x1, x2 = grid.nodes
    shape = (33, 64, 64)
    v = VectorField2(
        ScalarField(grid, np.broadcast_to(np.sin(3 * x2), shape)),
        ScalarField(grid, np.broadcast_to(np.cos(2 * x1), shape)),
    )
    R = SymTraceFreeTensor2Field(
        ScalarField(grid, np.broadcast_to(0.1 * np.cos(x1 + x2), shape)),
        ScalarField(grid, np.broadcast_to(0.05 * np.sin(x1), shape)),
    )
    v_ell, R_ell = mollify(v, R, 0.3, time_grid)
    assert isinstance(R_ell, SymTraceFreeTensor2Field) and R_ell.time_shape == (33,)
    assert sup_norm(R_ell) <= sup_norm(R) + 1e-14
    report = convolution_report(v, v_ell, R, R_ell, 0.3)
    assert 0.0 < report.velocity_gap <= 0.3 * c_seminorm(v, 1)
    assert report.velocity_c2_scaled > 0.0
    assert len(report.rows()) == 4
    print("✓ [Test 5] Passed")


if __name__ == "__main__":
    test_constants_unchanged()
    test_spatial_gap()
    test_temporal_linear_preserved()
    test_unresolved_kernel()
    test_mollify_pair_and_report()
