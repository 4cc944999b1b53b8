import numpy as np

from common.torus_config import RESIDUAL_TOL
from common.torus_fields import Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2
from evolution.time_grid import TimeGrid
from scheme.initial_data import EnergyProfile, initial_tuple
from scheme.state import StageState
from scheme.test_stage_driver import tiny_stage
from verification.residuals import residual_boussinesq_reynolds, temperature_increment_residual


def test_manufactured_solution():
    print("[Test 1] v = 0, θ = e^-t sin x₂, p = e^-t (1 - cos x₂) Is An Exact Solution")
    grid, time_grid = Grid(16), TimeGrid(513)
    _, x2 = grid.nodes
    decay = np.exp(-time_grid.times)
    shape = (time_grid.n_t,)
    theta = ScalarField(grid, np.broadcast_to(np.sin(x2), shape + x2.shape)).scale_time(decay)
    p = ScalarField(grid, np.broadcast_to(1 - np.cos(x2), shape + x2.shape)).scale_time(decay)
    state = StageState(0, time_grid, VectorField2.zeros(grid, shape), p, theta, SymTraceFreeTensor2Field.zeros(grid, shape))
    report = residual_boussinesq_reynolds(state)
    assert report.worst <= 1e-10
    assert report.momentum.l2 <= 1e-10 and report.temperature.l2 <= 1e-10
    assert [row["equation"] for row in report.rows()] == ["momentum", "divergence", "temperature"]
    print("✓ [Test 1] Passed")


def test_initial_tuple_residual():
    print("[Test 2] The Starting Tuple Solves The System At N = 16λ₀")
    lambda0 = 2
    grid, time_grid = Grid(16 * lambda0), TimeGrid(257)
    state = initial_tuple(EnergyProfile((1.0, 0.001)), (1.0, 0.5), lambda0, grid, time_grid, 4.0 ** -1.6)
    report = residual_boussinesq_reynolds(state)
    assert report.momentum.sup <= 1e-9
    assert report.divergence.sup <= 1e-9
    assert report.temperature.sup <= 1e-9
    print("✓ [Test 2] Passed")


def test_stage_residual():
    print("[Test 3] The Assembled Stress Accounts For The New Momentum Defect")
    _, _, state, new_state, _ = tiny_stage()
    with_stress = residual_boussinesq_reynolds(new_state)
    grid, shape = new_state.grid, (new_state.time_grid.n_t,)
    bare = StageState(1, new_state.time_grid, new_state.v, new_state.p, new_state.theta,
                      SymTraceFreeTensor2Field.zeros(grid, shape))
    without_stress = residual_boussinesq_reynolds(bare)
    assert without_stress.momentum.sup > 0.0
    assert with_stress.momentum.sup <= 0.1 * without_stress.momentum.sup
    assert with_stress.momentum.sup <= RESIDUAL_TOL
    assert with_stress.divergence.sup <= 1e-10
    assert np.isfinite(with_stress.temperature.l2)
    print("✓ [Test 3] Passed")


def test_temperature_increment_residual():
    print("[Test 4] θ₁ - θ Starts At Zero And Vanishes For Identical States")
    _, _, state, new_state, _ = tiny_stage()
    norms, start = temperature_increment_residual(state, state)
    assert norms.sup == 0.0 and start == 0.0
    norms, start = temperature_increment_residual(state, new_state)
    assert start <= 1e-12
    assert np.isfinite(norms.sup)
    print("✓ [Test 4] Passed")


if __name__ == "__main__":
    test_manufactured_solution()
    test_initial_tuple_residual()
    test_stage_residual()
    test_temperature_increment_residual()
