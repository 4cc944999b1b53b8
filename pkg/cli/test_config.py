import tempfile
from pathlib import Path

from cli.config import config_from_entries, load_config, save_config, with_mode
from common.errors import ConfigError
from common.field_io import read_key_values


def expect_config_error(entries, key):
    try:
        config_from_entries(entries)
        raise AssertionError(f"Expected ConfigError for {entries}")
    except ConfigError as err:
        assert err.key == key, (err.key, key)
        assert key in str(err)


def test_defaults_from_desk_preset():
    print("[Test 1] A Minimal Configuration Is Filled From The Desk Preset")
    config = config_from_entries({"energy_coeffs": "1.0, 0.001"})
    assert config.energy_coeffs == (1.0, 0.001)
    assert (config.a, config.gamma, config.lambda0, config.N, config.n_t) == (4.0, 0.4, 5, 512, 257)
    assert config.mode == "toy" and config.theta0 == (1.0, 0.0)
    assert config.schedule().frequency(1) == 50
    print("✓ [Test 1] Passed")


def test_errors_name_the_key():
    print("[Test 2] Configuration Errors Name The Offending Key")
    expect_config_error({}, "energy_coeffs")
    expect_config_error({"energy_coeffs": "1.0", "colour": "blue"}, "colour")
    expect_config_error({"energy_coeffs": "1.0", "N": "many"}, "N")
    expect_config_error({"energy_coeffs": "1.0", "N": "7"}, "N")
    expect_config_error({"energy_coeffs": "0.1, 1.0"}, "energy_coeffs")
    expect_config_error({"energy_coeffs": "1.0", "mode": "fast"}, "mode")
    expect_config_error({"energy_coeffs": "1.0", "preset": "huge"}, "preset")
    expect_config_error({"energy_coeffs": "1.0", "theta0": "1.0"}, "theta0")
    expect_config_error({"energy_coeffs": "1.0", "a": "0.5"}, "a")
    expect_config_error({"energy_coeffs": "1.0", "n_t": "3"}, "n_t")
    print("✓ [Test 2] Passed")


def test_preset_override_and_round_trip():
    print("[Test 3] Overrides Win Over The Preset And Survive A Round Trip")
    config = config_from_entries({"preset": "tiny", "energy_coeffs": "1.0, 0.001", "n_t": "17", "theta0": "0.6, 0.8"})
    assert (config.N, config.n_t, config.lambda0) == (64, 17, 1)
    with tempfile.TemporaryDirectory() as tmp:
        path = save_config(config, Path(tmp) / "run.config")
        assert load_config(path) == config
        Path(tmp, "broken.config").write_text("energy_coeffs 1.0\n", encoding="utf-8")
        try:
            load_config(Path(tmp) / "broken.config")
            raise AssertionError("Expected ConfigError")
        except ConfigError:
            pass
    assert with_mode(config, "strict").mode == "strict"
    assert with_mode(config, None) is config
    print("✓ [Test 3] Passed")


def test_spec_keys_and_out_dir():
    print("[Test 4] theta0_sin, theta0_cos And out_dir Are Read And Written")
    config = config_from_entries({
        "energy_coeffs": "1.0", "theta0_sin": "0.25", "theta0_cos": "-0.5", "out_dir": "runs/desk",
    })
    assert config.theta0 == (0.25, -0.5) and config.out_dir == "runs/desk"
    assert config_from_entries({"energy_coeffs": "1.0", "theta0_cos": "2.0"}).theta0 == (1.0, 2.0)
    assert config_from_entries({"energy_coeffs": "1.0", "theta0": "0.25, -0.5"}).theta0 == config.theta0
    expect_config_error({"energy_coeffs": "1.0", "theta0": "1.0, 0.0", "theta0_sin": "1.0"}, "theta0")
    expect_config_error({"energy_coeffs": "1.0", "theta0_cos": "zero"}, "theta0_cos")

    entries = config.entries()
    assert "theta0" not in entries
    assert (entries["theta0_sin"], entries["theta0_cos"], entries["out_dir"]) == (0.25, -0.5, "runs/desk")
    with tempfile.TemporaryDirectory() as tmp:
        path = save_config(config, Path(tmp) / "run.config")
        written = read_key_values(path)
        assert written["theta0_sin"] == "0.25" and written["theta0_cos"] == "-0.5"
        assert written["out_dir"] == "runs/desk" and "theta0" not in written
        assert load_config(path) == config
    print("✓ [Test 4] Passed")


if __name__ == "__main__":
    test_defaults_from_desk_preset()
    test_errors_name_the_key()
    test_preset_override_and_round_trip()
    test_spec_keys_and_out_dir()
