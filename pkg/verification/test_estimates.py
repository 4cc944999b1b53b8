import numpy as np

from common.torus_fields import sup_norm
from scheme.test_stage_driver import THETA0, tiny_setup, tiny_stage
from verification.estimates import (
    EstimateRow, holder_report, inductive_estimate_report, manifest_constant, phase_rows, state_report,
)

INCREMENT_ROWS = (
    "|v_q+1 - v_q|_0 <= M delta_q+1^1/2",
    "|v_q+1 - v_q|_1 <= delta_q+1^1/2 lambda_q+1",
    "|p_q+1 - p_q|_0 <= M^2 delta_q+1",
    "|p_q+1 - p_q|_1 <= M^2 delta_q+1 lambda_q+1",
    "theta increment energy <= 4 M^2 |theta0|_0^2 delta_q+1",
    "theta increment energy <= 4 |theta0|_0^2 |v_q+1 - v_q|_0^2",
    "theta increment equation residual",
    "|d_t(v_q+1 - v_q)|_0 <= delta_q+1^1/2 lambda_q+1",
    "|d_t(p_q+1 - p_q)|_0 <= delta_q+1 lambda_q+1",
    "|grad(theta_q+1 - theta_q)|_LinfL2 <= delta_q+1^1/2",
    "|theta_q+1 - theta_q|_LinfH^1/2 <= delta_q+1^1/2 lambda_q+1^-1/2",
)


def test_rows():
    print("[Test 1] Rows Compare With A Relative Tolerance And Fail On nan")
    assert EstimateRow("x", 1.0, 1.0).holds
    assert not EstimateRow("x", 1.1, 1.0).holds
    assert not EstimateRow("x", 1.0, float("nan")).holds
    assert EstimateRow("x", 0.0, 0.0).ratio == 0.0
    assert EstimateRow("x", 1.0, 0.0).ratio == float("inf")
    print("✓ [Test 1] Passed")


def test_initial_state_report():
    print("[Test 2] Every Strict Check Holds For The Starting Tuple")
    schedule, energy, state = tiny_setup()
    report = state_report(state, schedule, energy, THETA0)
    assert report.strict_holds, report.failures()
    assert report.row("energy gap <= delta_q+1/4").holds
    assert len(report.table()) == len(report.rows)
    print("✓ [Test 2] Passed")


def test_zero_perturbation_rows():
    print("[Test 3] Identical States Give Zero Increments")
    schedule, energy, state = tiny_setup()
    report = inductive_estimate_report(state, state, schedule, energy, THETA0, M=1.0)
    for name in INCREMENT_ROWS:
        assert report.row(name).lhs == 0.0, name
    assert report.strict_holds, report.failures()
    print("✓ [Test 3] Passed")


def test_stage_rows():
    print("[Test 4] Increment Rows Of One Tiny Stage")
    schedule, energy, state, new_state, stage = tiny_stage()
    report = inductive_estimate_report(state, new_state, schedule, energy, THETA0)
    M = manifest_constant(new_state, "M")
    assert M == stage.constants["M"]
    velocity = report.row("|v_q+1 - v_q|_0 <= M delta_q+1^1/2")
    assert abs(velocity.lhs - sup_norm(new_state.v - state.v)) == 0.0
    assert velocity.holds
    assert report.row("theta increment energy <= 4 |theta0|_0^2 |v_q+1 - v_q|_0^2").holds
    assert report.row("theta increment starts at zero").holds

    pressure = report.row("|p_q+1 - p_q|_0 <= M^2 delta_q+1")
    assert pressure.lhs == sup_norm(new_state.p - state.p) > 0.0
    assert pressure.rhs == M ** 2 * schedule.delta(1)
    assert report.row("|p_q+1 - p_q|_1 <= M^2 delta_q+1 lambda_q+1").lhs >= pressure.lhs
    assert report.row("|p_q+1 - p_q|_1 <= M^2 delta_q+1 lambda_q+1").rhs == pressure.rhs * 10
    rows = phase_rows(stage)
    assert len(rows) == 2 * len(stage.bundle.charts) + len(stage.convolution.rows())
    print("✓ [Test 4] Passed")


def test_holder_report():
    print("[Test 5] Hölder Increments And Interpolation Bounds")
    schedule, _, state, new_state, _ = tiny_stage()
    assert holder_report([state], schedule) == []
    rows = holder_report([state, new_state], schedule, alphas=(0.0, 0.09))
    assert [row["alpha"] for row in rows] == [0.0, 0.09]
    assert rows[0]["velocity_increment"] == sup_norm(new_state.v - state.v)
    assert rows[0]["pressure_increment"] == sup_norm(new_state.p - state.p)
    assert rows[1]["velocity_increment"] > rows[0]["velocity_increment"]
    for row in rows:
        assert np.isfinite(row["velocity_bound_formula"]) and row["velocity_bound_used"] > 0.0
    print("✓ [Test 5] Passed")


if __name__ == "__main__":
    test_rows()
    test_initial_state_report()
    test_zero_perturbation_rows()
    test_stage_rows()
    test_holder_report()
