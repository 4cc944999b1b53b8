import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from common.field_io import dump_series, load_series, read_key_values, write_key_values
from common.torus_fields import (
    Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2, divergence, sup_norm,
)
from evolution.time_grid import TimeGrid

logger = logging.getLogger(__name__)

STATE_FIELDS = ("v", "p", "theta", "R")


@dataclass(frozen=True)
class StageState:
    """A solution (v_q, p_q, θ_q, R̊_q) of the Boussinesq–Reynolds system, sampled on time_grid."""
    q: int
    time_grid: TimeGrid
    v: VectorField2
    p: ScalarField
    theta: ScalarField
    R: SymTraceFreeTensor2Field
    manifest: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.v.grid

    def divergence_defect(self) -> float:
        """sup|div v| relative to sup|v|."""
        scale = max(sup_norm(self.v), np.finfo(float).tiny)
        return sup_norm(divergence(self.v)) / scale

    def theta_mean_defect(self) -> float:
        return float(np.abs(self.theta.mean()).max())

    def with_manifest(self, entries: dict) -> "StageState":
        return StageState(self.q, self.time_grid, self.v, self.p, self.theta, self.R, {**self.manifest, **entries})


def state_directory(run_dir, q: int) -> Path:
    return Path(run_dir) / f"state_q{q}"


def save_state(state: StageState, run_dir) -> Path:
    """Field dumps of every component plus `state.manifest`; returns the state directory."""
    directory = state_directory(run_dir, state.q)
    times = state.time_grid.times
    files = {name: dump_series(directory, name, getattr(state, name), times).name for name in STATE_FIELDS}
    entries = {
        "q": state.q,
        "N": state.grid.N,
        "n_t": state.time_grid.n_t,
        **{f"{name}_manifest": file_name for name, file_name in files.items()},
        **state.manifest,
    }
    write_key_values(directory / "state.manifest", entries)
    logger.info("Saved state q=%d to %s", state.q, directory)
    return directory


def load_state(run_dir, q: int) -> StageState:
    """
    Raises:
        ChecksumMismatch: a dump is corrupted or disagrees with its manifest.
        FileNotFoundError: no state q under run_dir.
    """
    directory = state_directory(run_dir, q)
    entries = read_key_values(directory / "state.manifest")
    time_grid = TimeGrid(int(entries["n_t"]))
    loaded = {name: load_series(directory / entries[f"{name}_manifest"])[0] for name in STATE_FIELDS}
    reserved = {"q", "N", "n_t"} | {f"{name}_manifest" for name in STATE_FIELDS}
    manifest = {key: value for key, value in entries.items() if key not in reserved}
    return StageState(int(entries["q"]), time_grid, manifest=manifest, **loaded)
