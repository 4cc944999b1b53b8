"""
Command-line front door.

    python -m cli.main init   --config run.cfg [--out RUN] [--mode toy|strict]
    python -m cli.main run    --out RUN --stages n
    python -m cli.main verify --out RUN [--probe NAME|all] [--deterministic]
    python -m cli.main export --out RUN --what v|p|theta|R|stress|energy-gap|energy-split --q Q [--t T] [--format csv|binary]

Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 numerical-stability error.
Every file a command writes is listed in RUN/run.manifest. `init` falls back to the
configured out_dir when --out is not given; the other commands need --out.
"""
import argparse
import logging
import shutil
import sys
import time
from dataclasses import replace
from pathlib import Path

from cli.config import RunConfig, load_config, save_config, with_mode
from common.errors import ConfigError, ParameterGateError, StageError, TorusEngineError
from common.field_io import dump_field, export_csv, read_key_values, write_key_values, write_table_csv
from scheme.initial_data import initial_tuple
from scheme.parameters import enforce_gate
from scheme.stage_driver import energy_gap, kinetic_energy, run_stage
from scheme.state import load_state, save_state, state_directory
from verification.estimates import holder_report, inductive_estimate_report, phase_rows, state_report
from verification.probes import PROBES, scaling_probe_suite

logger = logging.getLogger(__name__)

CONFIG_FILE = "run.config"
MANIFEST_FILE = "run.manifest"
REPORT_DIR = "reports"
EXPORT_DIR = "exports"
MANIFEST_SECTIONS = ("config", "states", "reports", "exports")

EXIT_PASS, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_UNSTABLE = 0, 1, 2, 3
FIELD_EXPORTS = ("v", "p", "theta", "R")
TABLE_EXPORTS = ("stress", "energy-gap", "energy-split")


# --- run directory bookkeeping -------------------------------------------------------------

def read_manifest(run_dir) -> dict[str, list[str]]:
    path = Path(run_dir) / MANIFEST_FILE
    entries = read_key_values(path) if path.exists() else {}
    return {
        section: [s.strip() for s in entries.get(section, "").split(",") if s.strip()]
        for section in MANIFEST_SECTIONS
    }


def _relative(run_dir: Path, path) -> str:
    path = Path(path)
    try:
        return path.resolve().relative_to(run_dir.resolve()).as_posix()
    except ValueError:
        return path.as_posix()


def register(run_dir, section: str, paths) -> None:
    """Adds paths under run_dir to a manifest section, stored relative to run_dir and sorted."""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    names = {_relative(run_dir, p) for p in paths}
    manifest[section] = sorted(set(manifest[section]) | names)
    write_key_values(run_dir / MANIFEST_FILE, manifest)


def run_config(run_dir) -> RunConfig:
    path = Path(run_dir) / CONFIG_FILE
    if not path.exists():
        raise ConfigError(f"{run_dir} has no {CONFIG_FILE}; run 'init' first", CONFIG_FILE)
    return load_config(path)


def saved_stages(run_dir) -> list[int]:
    return sorted(
        int(path.name[len("state_q"):])
        for path in Path(run_dir).glob("state_q*")
        if path.is_dir() and path.name[len("state_q"):].isdigit()
    )


def _report_path(run_dir, name: str) -> Path:
    directory = Path(run_dir) / REPORT_DIR
    directory.mkdir(parents=True, exist_ok=True)
    return directory / name


# --- commands ------------------------------------------------------------------------------

def cmd_init(config_path, run_dir=None, mode: str | None = None) -> Path:
    config = with_mode(load_config(config_path), mode)
    run_dir = run_dir or config.out_dir
    if not run_dir:
        raise ConfigError("No run directory: set out_dir in the configuration or pass --out", "out_dir")
    run_dir = Path(run_dir)
    config = replace(config, out_dir=run_dir.as_posix())
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, run_dir / CONFIG_FILE)
    register(run_dir, "config", [run_dir / CONFIG_FILE])
    logger.info("Initialised %s: a=%g, λ₀=%d, N=%d, n_t=%d, mode %s",
                run_dir, config.a, config.lambda0, config.N, config.n_t, config.mode)
    return run_dir


def _write_stage_reports(run_dir, report, deterministic: bool) -> list[Path]:
    q = report.params.q
    tables = {
        f"stage_q{q}_parameters.csv": report.parameters.table(),
        f"stage_q{q}_stress.csv": [{"q": q, **row} for row in report.breakdown.rows()],
        f"stage_q{q}_energy_split.csv": [{"q": q, **row} for row in report.split.rows()],
        f"stage_q{q}_phases.csv": phase_rows(report),
    }
    if not deterministic:
        tables[f"stage_q{q}_timings.csv"] = [{"phase": name, "seconds": t} for name, t in report.timings.items()]
    return [write_table_csv(_report_path(run_dir, name), rows) for name, rows in tables.items()]


def cmd_run(run_dir, stages: int, mode: str | None = None, deterministic: bool = False) -> list[Path]:
    """
    Builds the starting tuple and `stages` stages on top of it, saving every state.

    Raises:
        ParameterGateError: strict mode and a parameter inequality fails; its table is saved first.
        StageError: a stage failed, with the stage and phase named.
    """
    if stages < 0:
        raise ConfigError(f"--stages must be non-negative, got {stages}", "stages")
    run_dir = Path(run_dir)
    config = with_mode(run_config(run_dir), mode)
    schedule, energy = config.schedule(), config.energy()
    try:
        for q in range(stages):
            enforce_gate(schedule, q)
    except ParameterGateError as err:
        if err.report is not None:
            path = write_table_csv(_report_path(run_dir, f"refused_q{err.report.q}_parameters.csv"), err.report.table())
            register(run_dir, "reports", [path])
        raise

    state = initial_tuple(
        energy, config.theta0, schedule.frequency(0), config.grid(), config.time_grid(), schedule.delta(1),
    )
    directories = [save_state(state, run_dir)]
    reports = []
    for _ in range(stages):
        state, report = run_stage(state, schedule, energy, config.theta0)
        directories.append(save_state(state, run_dir))
        reports.extend(_write_stage_reports(run_dir, report, deterministic))
    # states beyond this run belong to an earlier, longer run
    for q in saved_stages(run_dir):
        if q > stages:
            shutil.rmtree(state_directory(run_dir, q))
    manifest = read_manifest(run_dir)
    manifest["states"] = []
    write_key_values(run_dir / MANIFEST_FILE, manifest)
    register(run_dir, "states", directories)
    register(run_dir, "reports", reports)
    return directories


def _probe_names(probe: str | None):
    if probe is None:
        return None
    return list(PROBES) if probe == "all" else [probe]


def cmd_verify(run_dir, probe: str | None = None, deterministic: bool = False) -> int:
    """
    Checks every saved state, every consecutive pair and the requested probes.
    Returns EXIT_PASS iff every strict check and every probe passes.
    """
    run_dir = Path(run_dir)
    start = time.perf_counter()
    stages = saved_stages(run_dir)
    failures = []
    written = []

    if stages:
        config = run_config(run_dir)
        schedule, energy = config.schedule(), config.energy()
        states = [load_state(run_dir, q) for q in stages]
        state_rows, pair_rows = [], []
        for state in states:
            report = state_report(state, schedule, energy, config.theta0, config.residual_tol)
            state_rows.extend(report.table())
            failures.extend(f"q={state.q}: {row.name}" for row in report.failures())
        for state, state_next in zip(states, states[1:]):
            report = inductive_estimate_report(state, state_next, schedule, energy, config.theta0)
            pair_rows.extend(report.table())
            failures.extend(f"q={state.q}->{state_next.q}: {row.name}" for row in report.failures())
        written += [
            write_table_csv(_report_path(run_dir, "verify_states.csv"), state_rows),
            write_table_csv(_report_path(run_dir, "verify_estimates.csv"), pair_rows),
            write_table_csv(_report_path(run_dir, "verify_holder.csv"), holder_report(states, schedule)),
        ]

    names = _probe_names(probe)
    if names is not None:
        results = scaling_probe_suite(names)
        written.append(write_table_csv(
            _report_path(run_dir, "verify_probes.csv"), [row for result in results for row in result.rows()],
        ))
        failures.extend(f"probe {result.name}: slope {result.slope:.3f}" for result in results if not result.passed)

    if not stages and names is None:
        raise ConfigError(f"{run_dir} holds no saved states; run 'run' or pass --probe", "out")

    lines = [f"states checked: {', '.join(str(q) for q in stages) or 'none'}"]
    lines += [f"probes: {', '.join(names) if names else 'none'}"]
    lines += [f"FAILED {failure}" for failure in failures] or ["all strict checks passed"]
    if not deterministic:
        lines.append(f"wall time: {time.perf_counter() - start:.2f} s")
    summary = _report_path(run_dir, "verify_summary.txt")
    summary.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(summary)
    register(run_dir, "reports", written)

    for failure in failures:
        logger.error("Check failed: %s", failure)
    return EXIT_CHECK_FAILED if failures else EXIT_PASS


def cmd_export(run_dir, what: str, q: int, t: float = 0.0, fmt: str = "csv") -> Path:
    """
    Raises:
        ConfigError: unknown export, or binary output requested for a table.
        FileNotFoundError: the requested state or stage report does not exist.
    """
    run_dir = Path(run_dir)
    directory = run_dir / EXPORT_DIR
    directory.mkdir(parents=True, exist_ok=True)
    if what in FIELD_EXPORTS:
        state = load_state(run_dir, q)
        j = state.time_grid.index_of(t)
        field = getattr(state, what)[j]
        if fmt == "csv":
            path = export_csv(directory / f"{what}_q{q}_j{j:04d}.csv", field)
        elif fmt == "binary":
            path = dump_field(directory / f"{what}_q{q}_j{j:04d}.cib", field, float(state.time_grid.times[j]))
        else:
            raise ConfigError(f"Unknown export format '{fmt}'", "format")
    elif what in TABLE_EXPORTS:
        if fmt != "csv":
            raise ConfigError(f"Tables export as csv only, got '{fmt}'", "format")
        path = directory / f"{what}_q{q}.csv"
        if what == "energy-gap":
            config = run_config(run_dir)
            state = load_state(run_dir, q)
            schedule, energy = config.schedule(), config.energy()
            gap = energy_gap(state.v, energy, schedule.delta(q + 1), state.time_grid)
            rows = [
                {"q": q, "t": time_, "energy": e, "kinetic": k, "gap": g, "bound": gap.delta / 4 * e}
                for time_, e, k, g in zip(gap.times, gap.energy, kinetic_energy(state.v), gap.gap)
            ]
            write_table_csv(path, rows)
        else:
            # stage tables are indexed by the stage that was run from state q
            name = {"stress": "stress", "energy-split": "energy_split"}[what]
            source = run_dir / REPORT_DIR / f"stage_q{q}_{name}.csv"
            if not source.exists():
                raise FileNotFoundError(f"No {what} table for stage {q}; run at least {q + 1} stage(s)")
            shutil.copyfile(source, path)
    else:
        raise ConfigError(f"Unknown export '{what}', expected one of {FIELD_EXPORTS + TABLE_EXPORTS}", "what")
    register(run_dir, "exports", [path])
    logger.info("Exported %s to %s", what, path)
    return path


# --- entry point ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="Run directory (init: overrides out_dir)")
    common.add_argument("--mode", choices=("toy", "strict"), default=None, help="Override the configured mode")
    common.add_argument("--deterministic", action="store_true", help="Leave wall-clock timings out of reports")
    common.add_argument("-v", "--verbose", action="store_true", help="DEBUG logging")

    parser = argparse.ArgumentParser(prog="cli.main", description="Convex-integration stages for Boussinesq-Reynolds on T²")
    commands = parser.add_subparsers(dest="command", required=True)

    init = commands.add_parser("init", parents=[common], help="Validate a configuration and create a run directory")
    init.add_argument("--config", type=Path, required=True, help="key = value configuration file")

    run = commands.add_parser("run", parents=[common], help="Build the starting tuple and n stages")
    run.add_argument("--stages", type=int, default=1)

    verify = commands.add_parser("verify", parents=[common], help="Check saved states and run probes")
    verify.add_argument("--probe", choices=sorted(PROBES) + ["all"], default=None)

    export = commands.add_parser("export", parents=[common], help="Export a field slice or a table")
    export.add_argument("--what", required=True, choices=FIELD_EXPORTS + TABLE_EXPORTS)
    export.add_argument("--q", type=int, default=0)
    export.add_argument("--t", type=float, default=0.0)
    export.add_argument("--format", dest="fmt", choices=("csv", "binary"), default="csv")
    return parser


def dispatch(args) -> int:
    if args.command == "init":
        cmd_init(args.config, args.out, args.mode)
        return EXIT_PASS
    if args.out is None:
        raise ConfigError(f"'{args.command}' needs --out RUN", "out")
    if args.command == "run":
        cmd_run(args.out, args.stages, args.mode, args.deterministic)
        return EXIT_PASS
    if args.command == "verify":
        return cmd_verify(args.out, args.probe, args.deterministic)
    cmd_export(args.out, args.what, args.q, args.t, args.fmt)
    return EXIT_PASS


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return dispatch(args)
    except ConfigError as err:
        logger.error("Configuration error: %s", err)
        return EXIT_CONFIG
    except ParameterGateError as err:
        logger.error("Refused: %s", err)
        if err.report is not None:
            for row in err.report.violations():
                logger.error("  %s: %.4e > %.4e", row.name, row.lhs, row.rhs)
        return EXIT_CHECK_FAILED
    except StageError as err:
        logger.error("%s", err)
        return EXIT_UNSTABLE if isinstance(err.__cause__, ArithmeticError) else EXIT_CHECK_FAILED
    except ArithmeticError as err:
        logger.error("Numerical instability: %s", err)
        return EXIT_UNSTABLE
    except (TorusEngineError, FileNotFoundError) as err:
        logger.error("%s", err)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
