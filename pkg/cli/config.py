"""
Run configuration: a `key = value` file read into a frozen RunConfig.

    preset = desk                 # desk | tiny, fills a, gamma, lambda0, lambda_growth, N, n_t
    energy_coeffs = 1.0, 0.001    # required, e(t) = Σ c_n cos(nπt)
    theta0_sin = 1.0              # θ⁰ = s sin x₂ + c cos x₂
    theta0_cos = 0.0
    mode = toy                    # toy | strict
    out_dir = runs/desk           # run directory, --out overrides it

Any preset value can be overridden by its own key. `theta0 = s, c` is accepted
in place of the two theta0_* keys.
"""
import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from common.errors import ConfigError, GridError
from common.field_io import read_key_values, write_key_values
from common.torus_config import PRESETS, RESIDUAL_TOL
from common.torus_fields import Grid
from evolution.time_grid import TimeGrid
from scheme.initial_data import EnergyProfile
from scheme.parameters import MODES, ParamSchedule

logger = logging.getLogger(__name__)

DEFAULT_PRESET = "desk"
REQUIRED_KEYS = ("energy_coeffs",)
THETA0_KEYS = ("theta0_sin", "theta0_cos")


@dataclass(frozen=True)
class RunConfig:
    energy_coeffs: tuple
    theta0: tuple = (1.0, 0.0)
    preset: str = DEFAULT_PRESET
    mode: str = "toy"
    a: float = PRESETS[DEFAULT_PRESET]["a"]
    gamma: float = PRESETS[DEFAULT_PRESET]["gamma"]
    lambda0: int = PRESETS[DEFAULT_PRESET]["lambda0"]
    lambda_growth: int = PRESETS[DEFAULT_PRESET]["lambda_growth"]
    N: int = PRESETS[DEFAULT_PRESET]["N"]
    n_t: int = PRESETS[DEFAULT_PRESET]["n_t"]
    eta: float = 1.0
    residual_tol: float = RESIDUAL_TOL
    out_dir: str = ""

    def schedule(self) -> ParamSchedule:
        return ParamSchedule(
            a=self.a, gamma=self.gamma, mode=self.mode, lambda0=self.lambda0,
            lambda_growth=self.lambda_growth, eta=self.eta,
        )

    def energy(self) -> EnergyProfile:
        return EnergyProfile(self.energy_coeffs)

    def grid(self) -> Grid:
        return Grid(self.N)

    def time_grid(self) -> TimeGrid:
        return TimeGrid(self.n_t)

    def entries(self) -> dict:
        """The file keys, with θ⁰ split into theta0_sin and theta0_cos."""
        entries = asdict(self)
        sin, cos = entries.pop("theta0")
        return {**entries, "theta0_sin": sin, "theta0_cos": cos}


def _floats(text: str) -> tuple:
    return tuple(float(s) for s in text.split(",") if s.strip())


_PARSERS = {
    "energy_coeffs": _floats,
    "theta0": _floats,
    "theta0_sin": float,
    "theta0_cos": float,
    "preset": str,
    "mode": str,
    "a": float,
    "gamma": float,
    "lambda0": int,
    "lambda_growth": int,
    "N": int,
    "n_t": int,
    "eta": float,
    "residual_tol": float,
    "out_dir": str,
}


def config_from_entries(entries: dict[str, str]) -> RunConfig:
    """
    Raises:
        ConfigError: unknown or missing key, unparsable value, or values the engine rejects.
    """
    known = {f.name for f in fields(RunConfig)} | set(THETA0_KEYS)
    for key in entries:
        if key not in known:
            raise ConfigError(f"Unknown configuration key '{key}'", key)
    for key in REQUIRED_KEYS:
        if key not in entries:
            raise ConfigError(f"Missing required configuration key '{key}'", key)

    values = {}
    for key, text in entries.items():
        try:
            values[key] = _PARSERS[key](text)
        except ValueError as err:
            raise ConfigError(f"Cannot parse '{key} = {text}': {err}", key) from err

    if any(key in values for key in THETA0_KEYS):
        if "theta0" in values:
            raise ConfigError("Give either theta0 or theta0_sin/theta0_cos, not both", "theta0")
        default_sin, default_cos = RunConfig.theta0
        values["theta0"] = (values.pop("theta0_sin", default_sin), values.pop("theta0_cos", default_cos))

    preset = values.get("preset", DEFAULT_PRESET)
    if preset not in PRESETS:
        raise ConfigError(f"Unknown preset '{preset}', expected one of {sorted(PRESETS)}", "preset")
    config = RunConfig(**{**PRESETS[preset], **values})
    validate(config)
    return config


def validate(config: RunConfig) -> None:
    if config.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got '{config.mode}'", "mode")
    if len(config.theta0) != 2:
        raise ConfigError(f"theta0 takes two coefficients (sin, cos), got {len(config.theta0)}", "theta0")
    if config.residual_tol <= 0.0:
        raise ConfigError(f"residual_tol must be positive, got {config.residual_tol}", "residual_tol")
    bounds = (
        ("a", config.a > 1.0, "must exceed 1"),
        ("gamma", config.gamma > 0.0, "must be positive"),
        ("lambda0", config.lambda0 >= 1, "must be a positive integer"),
        ("lambda_growth", config.lambda_growth >= 2, "must be at least 2"),
        ("eta", config.eta > 0.0, "must be positive"),
    )
    for key, ok, requirement in bounds:
        if not ok:
            raise ConfigError(f"{key} {requirement}, got {getattr(config, key)}", key)
    checks = (
        ("energy_coeffs", config.energy),
        ("N", config.grid),
        ("n_t", config.time_grid),
    )
    for key, build in checks:
        try:
            build()
        except (ValueError, GridError) as err:
            raise ConfigError(f"Invalid value for '{key}': {err}", key) from err
    if config.n_t < 5:
        raise ConfigError(f"n_t must be at least 5 for fourth-order time differences, got {config.n_t}", "n_t")


def load_config(path) -> RunConfig:
    try:
        entries = read_key_values(path)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    config = config_from_entries(entries)
    logger.info("Loaded configuration %s (preset %s, mode %s)", path, config.preset, config.mode)
    return config


def with_mode(config: RunConfig, mode: str | None) -> RunConfig:
    if mode is None:
        return config
    updated = replace(config, mode=mode)
    validate(updated)
    return updated


def save_config(config: RunConfig, path) -> Path:
    return write_key_values(path, config.entries())
