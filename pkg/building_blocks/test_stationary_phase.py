import numpy as np

from building_blocks.stationary_phase import oscillatory_integral, stationary_phase_probe
from common.errors import GridError
from common.torus_fields import Grid, ScalarField


def test_constant_amplitude_integrates_to_zero():
    print("[Test 1] Constant Amplitude Has No Oscillatory Mass")
    grid = Grid(32)
    a = ScalarField.constant(grid, 1.0)
    for lam in (1, 5, 10):
        assert abs(oscillatory_integral(a, (1, 0), lam)) < 1e-12
    print("✓ [Test 1] Passed")


def test_single_mode_amplitude():
    print("[Test 2] Resonant And Orthogonal Modes")
    grid = Grid(32)
    a = ScalarField.from_function(grid, lambda x1, x2: np.cos(3 * x1))
    assert abs(oscillatory_integral(a, (1, 0), 3) - 2 * np.pi ** 2) < 1e-11
    assert abs(oscillatory_integral(a, (1, 0), 5)) < 1e-12
    assert abs(oscillatory_integral(a, (0, 1), 3)) < 1e-12
    try:
        oscillatory_integral(a, (1, 0), 16)
        raise AssertionError("Expected GridError")
    except GridError:
        pass
    print("✓ [Test 2] Passed")


def test_c2_amplitude_decay():
    print("[Test 3] C² Amplitude Decays At Least Like λ^-2")
    grid = Grid(256)
    a = ScalarField.from_function(grid, lambda x1, x2: np.abs(np.sin(x1 / 2)) ** 3)
    table = stationary_phase_probe(a, (1, 0), [8, 16, 32, 64])
    assert table.slope <= -2 + 0.2
    assert len(table.rows()) == 4
    print("✓ [Test 3] Passed")


if __name__ == "__main__":
    test_constant_amplitude_integrates_to_zero()
    test_single_mode_amplitude()
    test_c2_amplitude_decay()
