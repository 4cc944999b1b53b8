import time
import statistics
import tempfile
import tracemalloc

import numpy as np

from building_blocks.anti_divergence import anti_divergence
from cli.config import config_from_entries
from common.errors import ChecksumMismatch
from common.field_io import dump_field, load_field
from common.torus_fields import Grid, ScalarField, VectorField2
from evolution.flow_map import solve_inverse_flow
from evolution.time_grid import TimeGrid
from evolution.transport_diffusion import solve_transport_diffusion
from scheme.initial_data import initial_tuple
from scheme.stage_driver import run_stage
from stage_builder.mollifier import mollify
from verification.residuals import residual_boussinesq_reynolds


BENCHMARK_ROUNDS = 3


def print_results_time(operation_name, times):
    if not times:
        print(f"{operation_name:<44} | No data")
        return
    avg_time = statistics.mean(times)
    min_time = min(times)
    max_time = max(times)
    print(f"{operation_name:<44} | Avg: {avg_time:.4f} s | Min: {min_time:.4f} s | Max: {max_time:.4f} s")


def print_results_memory(operation_name, memory_usages):
    if not memory_usages:
        print(f"{operation_name:<44} | No data")
        return
    avg_mem = statistics.mean(memory_usages) / 2**20
    min_mem = min(memory_usages) / 2**20
    max_mem = max(memory_usages) / 2**20
    print(f"{operation_name:<44} | Avg Mem: {avg_mem:.1f} MB | Min Mem: {min_mem:.1f} MB | Max Mem: {max_mem:.1f} MB")


def run_time_benchmark(op_func, op_name, rounds=BENCHMARK_ROUNDS):
    times = []
    for _ in range(rounds):
        start = time.perf_counter()
        op_func()
        times.append(time.perf_counter() - start)
    print_results_time(op_name, times)


def run_memory_benchmark(op_func, op_name, rounds=BENCHMARK_ROUNDS):
    memory_usages = []
    for _ in range(rounds):
        tracemalloc.start()
        op_func()
        _, peak_memory = tracemalloc.get_traced_memory()
        memory_usages.append(peak_memory)
        tracemalloc.stop()
    print_results_memory(op_name, memory_usages)


# --- Workloads ---
# A smooth divergence-free shear plus a travelling mode, sampled on n_t times
def shear_flow(N, n_t):
    grid, time_grid = Grid(N), TimeGrid(n_t)
    x1, x2 = grid.nodes
    t = time_grid.times[:, None, None]
    u1 = 0.5 * np.sin(x2) + 0.2 * np.cos(x1 + x2 - t)
    u2 = -0.2 * np.cos(x1 + x2 - t)
    return VectorField2(ScalarField(grid, u1), ScalarField(grid, u2)), time_grid


def starting_state(N, n_t):
    config = config_from_entries({"preset": "tiny", "energy_coeffs": "1.0, 0.001", "N": str(N), "n_t": str(n_t)})
    schedule, energy = config.schedule(), config.energy()
    state = initial_tuple(energy, config.theta0, schedule.frequency(0), config.grid(), config.time_grid(),
                          schedule.delta(1))
    return config, schedule, energy, state


def run_workload(mode, measure_mode, **kwargs):
    N, n_t = kwargs["N"], kwargs["n_t"]
    if mode == "transport":
        v, time_grid = shear_flow(N, n_t)
        theta0 = ScalarField.from_function(v.grid, lambda x1, x2: np.sin(x2))
        op_name = f"Transport-diffusion (N={N}, n_t={n_t})"
        op_func = lambda: solve_transport_diffusion(v, theta0, time_grid)
    elif mode == "flow":
        v, time_grid = shear_flow(N, n_t)
        mu = kwargs["mu"]
        op_name = f"Inverse flow, one chart (N={N}, mu={mu})"
        op_func = lambda: solve_inverse_flow(v, time_grid, 1, mu)
    elif mode == "anti_divergence":
        v, _ = shear_flow(N, n_t)
        op_name = f"Anti-divergence (N={N}, n_t={n_t})"
        op_func = lambda: anti_divergence(v)
    elif mode == "mollify":
        _, _, _, state = starting_state(N, n_t)
        ell = kwargs["ell"]
        op_name = f"Mollification (N={N}, ell={ell})"
        op_func = lambda: mollify(state.v, state.R, ell, state.time_grid)
    elif mode == "stage":
        _, schedule, energy, state = starting_state(N, n_t)
        op_name = f"Full stage q=0 (N={N}, n_t={n_t})"
        op_func = lambda: run_stage(state, schedule, energy, (1.0, 0.0))
    else:  # residuals
        _, _, _, state = starting_state(N, n_t)
        op_name = f"Residual check (N={N}, n_t={n_t})"
        op_func = lambda: residual_boussinesq_reynolds(state)

    if measure_mode == "time":
        run_time_benchmark(op_func, op_name)
    else:
        run_memory_benchmark(op_func, op_name)


# Per-phase wall times of one stage, as recorded by the driver itself
def stage_phase_timings(N, n_t):
    _, schedule, energy, state = starting_state(N, n_t)
    _, report = run_stage(state, schedule, energy, (1.0, 0.0))
    print(f"\n--- Stage Phases (N={N}, n_t={n_t}, mu={report.params.mu}) ---")
    for phase, seconds in report.timings.items():
        print(f"{phase:<44} | {seconds:.4f} s")


# --- Integrity Checks ---
# A flipped byte in a field dump must be caught by its checksum
def test_dump_integrity():
    print("\n--- Testing Dump Integrity ---")
    try:
        field = ScalarField.from_function(Grid(32), lambda x1, x2: np.cos(x1) * np.sin(2 * x2))
        with tempfile.TemporaryDirectory() as tmp:
            path = dump_field(f"{tmp}/theta.cib", field, 0.25)
            blob = bytearray(path.read_bytes())
            blob[len(blob) // 2] ^= 0x01
            path.write_bytes(bytes(blob))
            try:
                load_field(path, "scalar")
                print("    FAILURE: Corrupted dump loaded without complaint!")
                assert False, "Checksum did not catch the flipped byte"
            except ChecksumMismatch as e:
                print("    SUCCESS: Corrupted dump was rejected as expected.")
                print(f"      > {e}")
        print("Dump integrity test passed.")
    except AssertionError as e:
        print(f"FAIL: {e}")
    except Exception as e:
        print(f"ERROR: An unexpected error occurred: {e}")


# The starting tuple solves the Boussinesq-Reynolds system up to time-differencing error
def test_starting_residual():
    print("\n--- Testing Starting Tuple Residual ---")
    try:
        _, _, _, state = starting_state(64, 129)
        report = residual_boussinesq_reynolds(state)
        print(f"  - worst residual {report.worst:.3e}")
        assert report.worst < 1e-8, f"Residual {report.worst:.3e} too large"
        print("Starting residual test passed.")
    except AssertionError as e:
        print(f"FAIL: {e}")
    except Exception as e:
        print(f"ERROR: An unexpected error occurred: {e}")


def main():
    print("=" * 60)
    print("Running Stage Engine Benchmark Suite (Time Measurement)")
    print(f"Each operation is run {BENCHMARK_ROUNDS} times.")
    print("=" * 60)

    print("\n--- Transport-Diffusion Time ---")
    run_workload("transport", "time", N=64, n_t=33)
    run_workload("transport", "time", N=128, n_t=65)
    run_workload("transport", "time", N=256, n_t=129)

    print("\n--- Inverse Flow Time ---")
    run_workload("flow", "time", N=64, n_t=33, mu=2)
    run_workload("flow", "time", N=128, n_t=65, mu=4)

    print("\n--- Anti-Divergence And Mollification Time ---")
    run_workload("anti_divergence", "time", N=128, n_t=33)
    run_workload("anti_divergence", "time", N=256, n_t=33)
    run_workload("mollify", "time", N=64, n_t=33, ell=0.5)

    print("\n--- Stage And Residual Time ---")
    run_workload("stage", "time", N=64, n_t=33)
    run_workload("residuals", "time", N=64, n_t=33)

    print("\n" + "=" * 60)
    print("Running Stage Engine Benchmark Suite (Memory Measurement)")
    print(f"Each operation is run {BENCHMARK_ROUNDS} times.")
    print("=" * 60)

    print("\n--- Transport-Diffusion Memory ---")
    run_workload("transport", "memory", N=64, n_t=33)
    run_workload("transport", "memory", N=128, n_t=65)

    print("\n--- Stage Memory ---")
    run_workload("stage", "memory", N=64, n_t=33)

    stage_phase_timings(64, 33)

    print("\n" + "=" * 60)
    print("Running Integrity Checks")
    print("Each check runs once.")
    print("=" * 60)

    test_dump_integrity()
    test_starting_residual()

    print("\n" + "=" * 60)
    print("Benchmark suite finished.")
    print("=" * 60)


if __name__ == "__main__":
    main()
