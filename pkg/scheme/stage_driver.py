"""
One stage of the iteration: (v_q, p_q, θ_q, R̊_q) → (v_{q+1}, p_{q+1}, θ_{q+1}, R̊_{q+1}).

Phases, in order: mollify, partition, flow-maps, amplitudes, perturbation,
temperature, pressure, stress, assemble. Engine errors raised inside a phase are
re-raised as StageError naming the stage and the phase; the original error is
kept as __cause__.
"""
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from building_blocks.geometric_lemma import admissible_radius, family_for_chart
from common.errors import ParameterGateError, StageError, TorusEngineError, Unresolved
from common.torus_config import RESOLUTION_FACTOR
from common.torus_fields import VectorField2, sup_norm
from evolution.flow_map import solve_inverse_flow
from evolution.time_grid import TimeGrid
from evolution.transport_diffusion import EnergyLedger, solve_transport_diffusion, theta_energy_ledger
from scheme.initial_data import EnergyProfile, theta_profile
from scheme.parameters import ParameterReport, ParamSchedule, StageParameters, enforce_gate
from scheme.state import StageState
from stage_builder.mollifier import ConvolutionReport, convolution_report, mollify
from stage_builder.partition import build_partition
from stage_builder.perturbation import PerturbationBundle, build_chart, build_perturbation, compute_rho
from stress_assembly.reynolds_stress import StressBreakdown, assemble_stage, build_stress, new_pressure

logger = logging.getLogger(__name__)

PHASES = (
    "mollify", "partition", "flow-maps", "amplitudes", "perturbation",
    "temperature", "pressure", "stress", "assemble",
)


def kinetic_energy(v: VectorField2) -> np.ndarray:
    """∫|v|² dx per time sample."""
    return v.dot(v).values.sum(axis=(-2, -1)) * v.grid.cell_area


@dataclass(frozen=True)
class EnergyGap:
    """e(t)(1 - δ) - ∫|v|²(t) on every sample."""
    times: np.ndarray
    gap: np.ndarray
    energy: np.ndarray
    delta: float

    @property
    def normalized(self) -> float:
        """max_t |gap|/e(t)."""
        return float(np.max(np.abs(self.gap) / self.energy))

    @property
    def holds(self) -> bool:
        return self.normalized <= self.delta / 4


def energy_gap(v: VectorField2, energy: EnergyProfile, delta: float, time_grid: TimeGrid) -> EnergyGap:
    e = energy(time_grid.times)
    return EnergyGap(time_grid.times, e * (1 - delta) - kinetic_energy(v), e, delta)


@dataclass(frozen=True)
class EnergySplit:
    """
    e(1 - δ_{q+2}) - ∫|v + w|² = Err₁ - Err₂ with
        Err₁ = e(1 - δ_{q+2}) - ∫|v|² - ∫|w_o|²
        Err₂ = 2∫v·w + ∫(2w_o·w_c + |w_c|²)
    """
    times: np.ndarray
    err1: np.ndarray
    err2: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.err1 - self.err2

    def rows(self) -> list[dict]:
        return [
            {"t": t, "err1": e1, "err2": e2, "gap": e1 - e2}
            for t, e1, e2 in zip(self.times, self.err1, self.err2)
        ]


def energy_gap_split(v: VectorField2, bundle: PerturbationBundle, energy: EnergyProfile, delta_after_next: float,
                     time_grid: TimeGrid) -> EnergySplit:
    area = v.grid.cell_area
    integral = lambda f: f.values.sum(axis=(-2, -1)) * area
    w_o, w_c = bundle.w_o, bundle.w_c
    err1 = energy(time_grid.times) * (1 - delta_after_next) - kinetic_energy(v) - integral(w_o.dot(w_o))
    err2 = 2 * integral(v.dot(bundle.w)) + integral(w_o.dot(w_c) * 2.0 + w_c.dot(w_c))
    return EnergySplit(time_grid.times, err1, err2)


@dataclass(frozen=True)
class StageReport:
    params: StageParameters
    parameters: ParameterReport
    convolution: ConvolutionReport
    bundle: PerturbationBundle
    breakdown: StressBreakdown
    gap_before: EnergyGap
    gap_after: EnergyGap
    gap_after_previous_level: EnergyGap
    split: EnergySplit
    ledger: EnergyLedger
    constants: dict
    timings: dict = field(default_factory=dict)

    def manifest_entries(self) -> dict:
        bundle = self.bundle
        return {
            **self.params.manifest_entries(),
            "charts": [chart.l for chart in bundle.charts],
            **self.constants,
            "divergence_defect": bundle.divergence_defect,
            "corrector_defect": bundle.corrector_defect,
            "representation_defect": bundle.representation_defect,
            "oscillatory_defect": self.breakdown.oscillatory_defect,
            "transport_defect": self.breakdown.transport_defect,
            "energy_gap_before": self.gap_before.normalized,
            "energy_gap_after": self.gap_after.normalized,
            "energy_gap_after_previous_level": self.gap_after_previous_level.normalized,
            "energy_budget": self.params.energy_budget(),
            "theta_energy_drift": self.ledger.drift,
        }


@contextmanager
def _phase(q: int, name: str, timings: dict):
    logger.info("Stage %d -> %d: %s", q, q + 1, name)
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (TorusEngineError, ArithmeticError) as err:
        raise StageError(str(err), q, name) from err
    timings[name] = time.perf_counter() - start


def run_stage(state: StageState, schedule: ParamSchedule, energy: EnergyProfile,
              theta0_coeffs: tuple[float, float]) -> tuple[StageState, StageReport]:
    """
    Builds stage q+1 from state q.

    Raises:
        ParameterGateError: strict mode and a parameter inequality or the incoming energy gap fails.
        Unresolved: the grid has fewer than RESOLUTION_FACTOR·λ_{q+1} modes per direction.
        StageError: a construction phase failed; __cause__ holds the engine error.
    """
    q, grid, time_grid = state.q, state.grid, state.time_grid
    params = schedule.stage(q)
    parameters = enforce_gate(schedule, q)
    gap_before = energy_gap(state.v, energy, params.delta_next, time_grid)
    if not gap_before.holds:
        message = f"Energy gap {gap_before.normalized:.3e} exceeds δ_(q+1)/4 = {params.delta_next / 4:.3e}"
        if schedule.mode == "strict":
            raise ParameterGateError(message, parameters)
        logger.info("q=%d: %s (toy mode, continuing)", q, message)
    if grid.N < RESOLUTION_FACTOR * params.lambda_next:
        raise Unresolved(
            f"N={grid.N} cannot carry λ_(q+1)={params.lambda_next}, need N >= {RESOLUTION_FACTOR * params.lambda_next}"
        )

    timings = {}
    v, p, theta, R = state.v, state.p, state.theta, state.R
    with _phase(q, "mollify", timings):
        v_ell, R_ell = mollify(v, R, params.ell, time_grid)
        convolution = convolution_report(v, v_ell, R, R_ell, params.ell)

    with _phase(q, "partition", timings):
        partition = build_partition(params.mu)

    with _phase(q, "flow-maps", timings):
        flows = [solve_inverse_flow(v_ell, time_grid, l, params.mu) for l in partition.charts]
        flows = [flow for flow in flows if len(flow.indices)]

    with _phase(q, "amplitudes", timings):
        radii = {flow.l: 0.5 * admissible_radius(family_for_chart(flow.l)) for flow in flows}
        strict = schedule.mode == "strict"
        charts = [
            build_chart(
                flow.l, compute_rho(flow.l, energy, v, time_grid, params.mu, params.delta_after_next),
                flow, R_ell, partition, params.lambda_next, time_grid, radii[flow.l] if strict else None,
            )
            for flow in flows
        ]
        for chart in charts:
            if chart.admissibility > radii[chart.l] / 2:
                logger.warning(
                    "q=%d, chart %d: ‖R̊_ℓ‖/ρ_l = %.3e exceeds r0/2 = %.3e (toy mode, continuing)",
                    q, chart.l, chart.admissibility, radii[chart.l] / 2,
                )

    with _phase(q, "perturbation", timings):
        bundle = build_perturbation(charts, partition, params.lambda_next, grid, time_grid)
        v_new = v + bundle.w

    with _phase(q, "temperature", timings):
        theta_new = solve_transport_diffusion(v_new, theta_profile(grid, theta0_coeffs), time_grid)
        ledger = theta_energy_ledger(theta_new, time_grid)

    with _phase(q, "pressure", timings):
        p_new = new_pressure(p, bundle, v, v_ell)

    with _phase(q, "stress", timings):
        breakdown = build_stress(bundle, v, v_ell, R, R_ell, theta, theta_new, time_grid)
        breakdown = breakdown.with_bounds(params.stress_bounds())

    with _phase(q, "assemble", timings):
        new_state = assemble_stage(state, bundle, p_new, theta_new, breakdown)
        R_new = new_state.R
        c0 = sup_norm(bundle.w_o) / params.delta_next ** 0.5
        constants = {
            "C0": c0,
            "M": 2 * c0,
            "eta": sup_norm(R_new) / params.delta_after_next,
            "r0": min(radii.values(), default=0.5 * admissible_radius(family_for_chart(0))),
            "stress_ratio": max((chart.admissibility for chart in charts), default=0.0),
        }
        report = StageReport(
            params=params,
            parameters=parameters,
            convolution=convolution,
            bundle=bundle,
            breakdown=breakdown,
            gap_before=gap_before,
            gap_after=energy_gap(v_new, energy, params.delta_after_next, time_grid),
            gap_after_previous_level=energy_gap(v_new, energy, params.delta_next, time_grid),
            split=energy_gap_split(v, bundle, energy, params.delta_after_next, time_grid),
            ledger=ledger,
            constants=constants,
            timings=timings,
        )
        new_state = new_state.with_manifest(report.manifest_entries())

    logger.info(
        "Stage %d -> %d done: ‖w‖₀=%.3e, ‖R̊₁‖₀=%.3e, M=%.3f, energy gap %.3e",
        q, q + 1, sup_norm(bundle.w), sup_norm(R_new), constants["M"], report.gap_after.normalized,
    )
    return new_state, report
