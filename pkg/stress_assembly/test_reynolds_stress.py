import numpy as np
from numpy.testing import assert_allclose

from common.torus_fields import (
    Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2, divergence_tensor, sup_norm,
)
from evolution.flow_map import solve_inverse_flow
from evolution.time_grid import TimeGrid
from scheme.state import StageState
from stage_builder.partition import TimePartition
from stage_builder.perturbation import build_chart, build_perturbation
from stress_assembly.reynolds_stress import (
    STRESS_TERMS, assemble_stage, build_R1_term, build_R2_term, build_R4_term, build_R5_term, build_stress,
    chart_transport_derivative, new_pressure, transport_derivative,
)


def series(grid, time_grid, fn):
    x1, x2 = grid.nodes
    return ScalarField(grid, np.stack([np.broadcast_to(fn(t, x1, x2), x1.shape) for t in time_grid.times]))


def shear_velocity(grid, time_grid, amplitude):
    return VectorField2(
        series(grid, time_grid, lambda t, x1, x2: amplitude * np.sin(x2)),
        ScalarField.zeros(grid, (time_grid.n_t,)),
    )


def build_stage(grid, time_grid, mu, lam, v, R, rho=0.5):
    partition = TimePartition(mu)
    charts = [
        build_chart(l, rho, solve_inverse_flow(v, time_grid, l, mu), R, partition, lam, time_grid)
        for l in partition.charts
    ]
    return build_perturbation(charts, partition, lam, grid, time_grid)


def test_zero_perturbation():
    print("[Test 1] Zero Perturbation Leaves The State Unchanged")
    grid, time_grid = Grid(16), TimeGrid(9)
    v = shear_velocity(grid, time_grid, 0.3)
    p = series(grid, time_grid, lambda t, x1, x2: np.cos(x1) * t)
    theta = series(grid, time_grid, lambda t, x1, x2: np.exp(-t) * np.sin(x2))
    R = SymTraceFreeTensor2Field(series(grid, time_grid, lambda t, x1, x2: 0.1 * np.cos(x2)),
                                 ScalarField.zeros(grid, (9,)))
    bundle = build_perturbation([], TimePartition(1), 5, grid, time_grid)
    breakdown = build_stress(bundle, v, v, R, R, theta, theta, time_grid)
    for name in STRESS_TERMS:
        assert sup_norm(breakdown.terms[name]) == 0.0
    state = StageState(0, time_grid, v, p, theta, R)
    assembled = assemble_stage(state, bundle, new_pressure(p, bundle, v, v), theta, breakdown, {"M": 0.0})
    assert assembled.q == 1 and assembled.manifest == {"M": 0.0}
    assert_allclose(assembled.v.u1.values, v.u1.values, atol=0.0)
    assert_allclose(assembled.p.values, p.values, atol=0.0)
    assert sup_norm(assembled.R) == 0.0
    assert sup_norm(breakdown.total) == 0.0
    assert len(breakdown.rows()) == len(STRESS_TERMS) + 1
    print("✓ [Test 1] Passed")


def test_pointwise_terms():
    print("[Test 2] R⁴ And R⁵ Are The Trace-Free Parts Of Their Products")
    grid = Grid(16)
    rng = np.random.default_rng(11)
    w_o, w_c, v, v_ell = (
        VectorField2(ScalarField(grid, rng.normal(size=(16, 16))), ScalarField(grid, rng.normal(size=(16, 16))))
        for _ in range(4)
    )
    R4 = build_R4_term(w_o, w_c)
    o1, o2, c1, c2 = w_o.u1.values, w_o.u2.values, w_c.u1.values, w_c.u2.values
    assert_allclose(R4.t11.values, o1 * c1 - o2 * c2 + 0.5 * (c1 ** 2 - c2 ** 2), atol=1e-14)
    assert_allclose(R4.t12.values, o1 * c2 + o2 * c1 + c1 * c2, atol=1e-14)
    R5 = build_R5_term(w_o, v, v_ell)
    d1, d2 = v.u1.values - v_ell.u1.values, v.u2.values - v_ell.u2.values
    assert_allclose(R5.t11.values, o1 * d1 - o2 * d2, atol=1e-14)
    assert_allclose(R5.t12.values, o1 * d2 + o2 * d1, atol=1e-14)
    assert np.abs(R4.trace()).max() == 0.0
    print("✓ [Test 2] Passed")


def test_anti_divergence_terms():
    print("[Test 3] Buoyancy And Stretching Terms")
    grid = Grid(32)
    x1, x2 = grid.nodes
    theta = ScalarField.zeros(grid)
    theta_new = ScalarField(grid, np.sin(x2))
    R2 = build_R2_term(theta_new, theta)
    assert_allclose(R2.t11.values, -np.cos(x2), atol=1e-13)
    assert np.abs(R2.t12.values).max() < 1e-13

    w = VectorField2(ScalarField(grid, np.cos(x1)), ScalarField(grid, np.sin(x1 + x2)))
    constant = VectorField2(ScalarField(grid, np.full((32, 32), 0.4)), ScalarField(grid, np.full((32, 32), -1.0)))
    assert sup_norm(build_R1_term(w, constant)) < 1e-13
    v_ell = VectorField2(ScalarField(grid, np.sin(x2)), ScalarField.zeros(grid))
    stretch = w.u2.values * np.cos(x2)
    R1 = build_R1_term(w, v_ell)
    div = divergence_tensor(R1)
    assert_allclose(div.u1.values, stretch - stretch.mean(), atol=1e-12)
    assert np.abs(div.u2.values).max() < 1e-12
    print("✓ [Test 3] Passed")


def test_oscillatory_identity():
    print("[Test 4] T¹ + T² Matches div(w_o⊗w_o - Σχ²R_ℓ,l + P Id)")
    grid, time_grid = Grid(64), TimeGrid(17)
    v = shear_velocity(grid, time_grid, 0.2)
    R = SymTraceFreeTensor2Field(
        series(grid, time_grid, lambda t, x1, x2: 0.01 * np.cos(x1)),
        series(grid, time_grid, lambda t, x1, x2: 0.005 * np.sin(x1 + x2) * (1 + t)),
    )
    bundle = build_stage(grid, time_grid, 2, 5, v, R)
    theta = ScalarField.zeros(grid, (17,))
    breakdown = build_stress(bundle, v, v, R, R, theta, theta, time_grid)
    assert sup_norm(breakdown.T1) > 1e-4
    assert sup_norm(breakdown.T2) > 1e-6
    assert breakdown.oscillatory_defect <= 1e-9
    for name in STRESS_TERMS:
        assert np.abs(breakdown.terms[name].trace()).max() == 0.0
    print("✓ [Test 4] Passed")


def test_transport_derivative_by_charts():
    print("[Test 5] Material Derivative Of w From Differences And From Charts")
    grid, time_grid = Grid(64), TimeGrid(65)
    v = shear_velocity(grid, time_grid, 0.2)
    R = SymTraceFreeTensor2Field.zeros(grid, (65,))
    bundle = build_stage(grid, time_grid, 1, 5, v, R)
    direct = transport_derivative(bundle.w, v, time_grid)
    by_charts = chart_transport_derivative(bundle, v, time_grid)
    assert sup_norm(direct) > 1e-2
    assert sup_norm(direct - by_charts) <= 5e-3 * sup_norm(direct)
    print("✓ [Test 5] Passed")


if __name__ == "__main__":
    test_zero_perturbation()
    test_pointwise_terms()
    test_anti_divergence_terms()
    test_oscillatory_identity()
    test_transport_derivative_by_charts()
