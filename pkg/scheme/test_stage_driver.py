import tempfile
from functools import lru_cache

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from building_blocks.geometric_lemma import admissible_radius, direction_family
from common.errors import KernelUnresolved, ParameterGateError, StageError, Unresolved
from common.torus_config import DEFAULT_ENERGY_COEFFS, PRESETS, RESOLUTION_FACTOR
from common.torus_fields import Grid, VectorField2, sup_norm
from evolution.time_grid import TimeGrid
from scheme.initial_data import EnergyProfile, initial_tuple
from scheme.parameters import ParamSchedule
from scheme.stage_driver import PHASES, energy_gap, run_stage
from scheme.state import load_state, save_state
from stress_assembly.reynolds_stress import STRESS_TERMS

THETA0 = (1.0, 0.0)


def tiny_setup(N=None, n_t=None):
    preset = PRESETS["tiny"]
    schedule = ParamSchedule(
        a=preset["a"], gamma=preset["gamma"], lambda0=preset["lambda0"], lambda_growth=preset["lambda_growth"],
    )
    energy = EnergyProfile(DEFAULT_ENERGY_COEFFS)
    grid, time_grid = Grid(N or preset["N"]), TimeGrid(n_t or preset["n_t"])
    state = initial_tuple(energy, THETA0, schedule.frequency(0), grid, time_grid, schedule.delta(1))
    return schedule, energy, state


@lru_cache(maxsize=1)
def tiny_stage():
    schedule, energy, state = tiny_setup()
    new_state, report = run_stage(state, schedule, energy, THETA0)
    return schedule, energy, state, new_state, report


def test_energy_gap():
    print("[Test 1] Energy Gap Of The Initial Tuple And Of Zero Velocity")
    schedule, energy, state = tiny_setup()
    gap = energy_gap(state.v, energy, schedule.delta(1), state.time_grid)
    assert np.abs(gap.gap).max() <= 1e-10 * energy.maximum
    assert gap.holds
    grid, time_grid = Grid(16), TimeGrid(9)
    flat = energy_gap(VectorField2.zeros(grid, (9,)), EnergyProfile((1.0,)), 1.0, time_grid)
    assert np.all(flat.gap == 0.0) and flat.normalized == 0.0
    print("✓ [Test 1] Passed")


def test_tiny_stage():
    print("[Test 2] One Stage At The Tiny Preset")
    schedule, energy, state, new_state, report = tiny_stage()
    assert new_state.q == 1
    assert report.params.lambda_next == 10 and report.params.mu == 2
    assert [chart.l for chart in report.bundle.charts] == [0, 1, 2]
    assert new_state.divergence_defect() <= 1e-10
    assert new_state.theta_mean_defect() <= 1e-12
    for name in STRESS_TERMS:
        assert np.abs(report.breakdown.terms[name].trace()).max() == 0.0
    assert set(report.timings) == set(PHASES)
    assert sup_norm(new_state.v - state.v) > 0.0
    print("✓ [Test 2] Passed")


def test_energy_split_and_constants():
    print("[Test 3] Err₁ - Err₂ Reproduces The New Energy Gap")
    schedule, energy, state, new_state, report = tiny_stage()
    scale = energy.maximum
    assert_allclose(report.split.gap, report.gap_after.gap, atol=1e-12 * scale)
    assert len(report.split.rows()) == state.time_grid.n_t
    constants = report.constants
    assert constants["M"] == 2 * constants["C0"] > 0.0
    assert sup_norm(new_state.v - state.v) <= constants["M"] * report.params.delta_next ** 0.5
    assert abs(constants["r0"] - 0.5 * admissible_radius(direction_family(0))) < 1e-15
    assert constants["stress_ratio"] == max(chart.admissibility for chart in report.bundle.charts) > 0.0
    manifest = new_state.manifest
    for key in ("mu", "ell", "lambda_q+1", "charts", "M", "eta", "r0", "stress_ratio",
                "oscillatory_defect", "energy_budget"):
        assert key in manifest
    print("✓ [Test 3] Passed")


def test_state_round_trip():
    print("[Test 4] Saved States Load Back Unchanged")
    _, _, _, new_state, _ = tiny_stage()
    with tempfile.TemporaryDirectory() as tmp:
        save_state(new_state, tmp)
        loaded = load_state(tmp, 1)
    assert loaded.q == 1 and loaded.time_grid == new_state.time_grid
    assert_array_equal(loaded.v.u2.values, new_state.v.u2.values)
    assert_array_equal(loaded.R.t12.values, new_state.R.t12.values)
    assert_array_equal(loaded.theta.values, new_state.theta.values)
    assert int(loaded.manifest["mu"]) == 2
    print("✓ [Test 4] Passed")


def test_errors_carry_stage_context():
    print("[Test 5] Failures Name The Stage And Phase")
    # dt = 1/4 cannot resolve ℓ ≈ 0.447
    schedule, energy, state = tiny_setup(n_t=5)
    try:
        run_stage(state, schedule, energy, THETA0)
        raise AssertionError("Expected StageError")
    except StageError as err:
        assert err.stage == 0 and err.phase == "mollify"
        assert isinstance(err.__cause__, KernelUnresolved)

    strict = ParamSchedule(a=1.05, gamma=0.4, mode="strict")
    try:
        run_stage(state, strict, energy, THETA0)
        raise AssertionError("Expected ParameterGateError")
    except ParameterGateError:
        pass
    print("✓ [Test 5] Passed")


def test_resolution_guard():
    print("[Test 6] Grids Below RESOLUTION_FACTOR·λ_(q+1) Are Refused Up Front")
    schedule, energy, state = tiny_setup(N=32)
    assert state.grid.N < RESOLUTION_FACTOR * schedule.frequency(1)
    try:
        run_stage(state, schedule, energy, THETA0)
        raise AssertionError("Expected Unresolved")
    except Unresolved as err:
        assert not isinstance(err, StageError)
        assert "need N >= 40" in str(err)

    _, _, state, new_state, report = tiny_stage()
    assert state.grid.N >= RESOLUTION_FACTOR * report.params.lambda_next
    assert new_state.q == 1
    print("✓ [Test 6] Passed")


if __name__ == "__main__":
    test_energy_gap()
    test_tiny_stage()
    test_energy_split_and_constants()
    test_state_round_trip()
    test_errors_carry_stage_context()
    test_resolution_guard()
