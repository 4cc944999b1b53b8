"""
Stage perturbation: amplitudes, phases and the velocity/pressure corrections.

For chart l with directions Λ_(l) = Λ_{l mod 2}, k ∈ Λ_(l) and e_k = e^{iλk⊥·x}:

    a_kl = √ρ_l γ_k(Id - R̊_ℓ/ρ_l),    φ_kl = e^{iλk⊥·(Φ_l - x)}
    w    = -Σ_l χ_l λ⁻¹ Σ_k ∇⊥(a_kl φ_kl e_k)
    w_o  =  Σ_l χ_l Σ_k a_kl ik φ_kl e_k
    w_c  = -Σ_l χ_l λ⁻¹ Σ_k ∇⊥(a_kl φ_kl) e_k  = w - w_o
    L_kl = a_kl ik - ∇⊥a_kl/λ - i a_kl ∇⊥(k⊥·(Φ_l - x)),   so w = Σ_l χ_l Σ_k L_kl φ_kl e_k
    P    = ½ Σ (k·k' - 1) χ_l χ_l' a_kl a_k'l' φ_kl φ_k'l' e_{k+k'}  over ordered pairs with k' != -k

w is assembled from its stream function, so div w = 0 up to roundoff.
Only k ∈ Λ⁺ is stored: a_{-k} = a_k while φ_{-k}, e_{-k} and L_{-k} are complex conjugates.
"""
import logging
from dataclasses import dataclass

import numpy as np

from building_blocks.geometric_lemma import (
    Direction, DirectionFamily, family_for_chart, negate, rotate_quarter, solve_coefficients,
)
from building_blocks.stationary_flows import integer_wavevector, pair_pressure
from common.errors import InadmissibleStress, NonPositiveCoefficient, NonPositiveEnergyGap
from common.torus_config import PARTITION_SUPPORT
from common.torus_fields import (
    Grid, ScalarField, SymTraceFreeTensor2Field, VectorField2, divergence, grad_perp, sup_norm,
)
from evolution.flow_map import FlowMap
from evolution.time_grid import TimeGrid
from stage_builder.partition import TimePartition

logger = logging.getLogger(__name__)


def compute_rho(l: int, energy, v: VectorField2, time_grid: TimeGrid, mu: int, delta_after_next: float) -> float:
    """
    ρ_l = [e(l/μ)(1 - δ_{q+2}) - ∫|v|²(l/μ, x) dx] / (2(2π)²).

    Raises:
        NonPositiveEnergyGap: the bracket is not strictly positive.
    """
    t = l / mu
    speed_sq = time_grid.sample_at(v.dot(v).values, t)
    kinetic = float(np.sum(speed_sq) * v.grid.cell_area)
    bracket = energy(t) * (1 - delta_after_next) - kinetic
    if bracket <= 0.0:
        raise NonPositiveEnergyGap(
            f"Energy bracket at t={t:.4f} is {bracket:.4e} (e={energy(t):.4e}, ∫|v|²={kinetic:.4e})"
        )
    return bracket / (2 * (2 * np.pi) ** 2)


def _window_values(field: ScalarField, indices: np.ndarray, n_t: int) -> np.ndarray:
    if not field.time_shape:
        return np.broadcast_to(field.values, (len(indices),) + field.values.shape)
    if field.time_shape[0] != n_t:
        raise ValueError("Field is not sampled on the run's time grid")
    return field.values[indices]


def build_amplitudes(l: int, rho: float, R_ell: SymTraceFreeTensor2Field, family: DirectionFamily,
                     partition: TimePartition, time_grid: TimeGrid,
                     indices: np.ndarray | None = None, r0: float | None = None) -> tuple[dict, float]:
    """
    a_kl = √ρ_l γ_k(R_ℓ,l / ρ_l) with R_ℓ,l = ρ_l Id - R̊_ℓ, on the window samples of chart l.

    Coefficients are required to be positive only where χ_l != 0; outside that
    support they are clipped at 0 since every use of a_kl carries a factor χ_l.
    Returns the amplitudes and max ‖R̊_ℓ‖_F/ρ_l over the support.

    Raises:
        InadmissibleStress: r0 is given and that maximum exceeds r0/2.
        NonPositiveCoefficient: some γ_k² <= 0 on the support, with the chart and node attached.
    """
    if indices is None:
        indices = time_grid.window(*partition.window(l))
    grid = R_ell.grid
    t11 = _window_values(R_ell.t11, indices, time_grid.n_t) / rho
    t12 = _window_values(R_ell.t12, indices, time_grid.n_t) / rho
    times = time_grid.times[indices]
    inside = (np.abs(partition.mu * times - l) < PARTITION_SUPPORT)[None, :, None, None]
    ratio = np.sqrt(2 * (t11 ** 2 + t12 ** 2))
    admissibility = float(np.max(np.where(inside[0], ratio, 0.0))) if len(indices) else 0.0
    if r0 is not None and admissibility > r0 / 2:
        raise InadmissibleStress(
            f"Chart {l}: ‖R̊_ℓ‖/ρ_l reaches {admissibility:.3e}, above r0/2 = {r0 / 2:.3e}",
            chart=l, ratio=admissibility, bound=r0 / 2,
        )

    c = solve_coefficients(1.0 - t11, -t12, 1.0 + t11, family)
    masked = np.where(inside, c, np.inf)
    if np.any(masked <= 0.0):
        worst = np.unravel_index(np.argmin(masked), c.shape)
        node = (int(indices[worst[1]]), int(worst[2]), int(worst[3]))
        raise NonPositiveCoefficient(
            f"Chart {l}: geometric-lemma coefficient {c[worst]:.3e} <= 0 at node {node}",
            coefficients=c[(slice(None),) + tuple(worst[1:])], chart=l, node=node,
        )

    a = np.sqrt(rho * np.clip(c, 0.0, None))
    amplitudes = {k: ScalarField(grid, a[i]) for i, k in enumerate(family.plus_set)}
    return amplitudes, admissibility


def build_L_kl(a: ScalarField, phase_argument: ScalarField, k: Direction, lam: int) -> VectorField2:
    """L_kl = a ik - ∇⊥a/λ - i a ∇⊥(k⊥·D) with D = Φ_l - x and phase_argument = k⊥·D."""
    grad_a = grad_perp(a)
    grad_phase = grad_perp(phase_argument)
    k1, k2 = float(k[0]), float(k[1])
    return VectorField2(
        a * (1j * k1) - grad_a.u1 / lam - (a * grad_phase.u1) * 1j,
        a * (1j * k2) - grad_a.u2 / lam - (a * grad_phase.u2) * 1j,
    )


@dataclass(frozen=True)
class ChartData:
    """Everything chart l contributes, on the samples of its flow-map window."""
    l: int
    lam: int
    family: DirectionFamily
    rho: float
    flow: FlowMap
    chi: np.ndarray
    chi_prime: np.ndarray
    amplitudes: dict
    phases: dict
    L: dict
    admissibility: float

    @property
    def indices(self) -> np.ndarray:
        return self.flow.indices

    @property
    def grid(self) -> Grid:
        return self.flow.grid

    def wavevector(self, k: Direction) -> tuple[int, int]:
        """λk⊥ as integers."""
        return integer_wavevector(rotate_quarter(k), self.lam)

    def carrier(self, k: Direction) -> np.ndarray:
        m1, m2 = self.wavevector(k)
        x1, x2 = self.grid.nodes
        return np.exp(1j * (m1 * x1 + m2 * x2))

    def modulated(self, k: Direction) -> np.ndarray:
        """a_kl φ_kl for any k of the full family."""
        if k in self.amplitudes:
            return self.amplitudes[k].values * self.phases[k].values
        partner = negate(k)
        return self.amplitudes[partner].values * self.phases[partner].values.conj()

    def phase_defect(self) -> float:
        """max ||φ_kl| - 1|."""
        return max(float(np.abs(np.abs(p.values) - 1.0).max(initial=0.0)) for p in self.phases.values())

    def reconstruction_defect(self, R_ell: SymTraceFreeTensor2Field, time_grid: TimeGrid,
                              partition: TimePartition) -> float:
        """max |2Σ_k a_kl² k⊗k - (ρ_l Id - R̊_ℓ)| over the χ_l support."""
        times = self.flow.times
        inside = np.abs(partition.mu * times - self.l) < PARTITION_SUPPORT
        s11 = s12 = s22 = 0.0
        for k, a in self.amplitudes.items():
            k1, k2 = float(k[0]), float(k[1])
            a_sq = a.values ** 2
            s11, s12, s22 = s11 + 2 * a_sq * k1 * k1, s12 + 2 * a_sq * k1 * k2, s22 + 2 * a_sq * k2 * k2
        t11 = _window_values(R_ell.t11, self.indices, time_grid.n_t)
        t12 = _window_values(R_ell.t12, self.indices, time_grid.n_t)
        defect = np.maximum.reduce([
            np.abs(s11 - (self.rho - t11)), np.abs(s12 + t12), np.abs(s22 - (self.rho + t11)),
        ])
        return float(defect[inside].max(initial=0.0))


def build_chart(l: int, rho: float, flow: FlowMap, R_ell: SymTraceFreeTensor2Field,
                partition: TimePartition, lam: int, time_grid: TimeGrid, r0: float | None = None) -> ChartData:
    family = family_for_chart(l)
    amplitudes, admissibility = build_amplitudes(l, rho, R_ell, family, partition, time_grid, flow.indices, r0)
    D1, D2 = flow.displacement.u1, flow.displacement.u2
    phases, L = {}, {}
    for k in family.plus_set:
        kp = rotate_quarter(k)
        argument = D1 * float(kp[0]) + D2 * float(kp[1])
        phases[k] = ScalarField(flow.grid, np.exp(1j * lam * argument.values))
        L[k] = build_L_kl(amplitudes[k], argument, k, lam)
    chart = ChartData(
        l=l, lam=lam, family=family, rho=rho, flow=flow,
        chi=partition.chi(l, flow.times), chi_prime=partition.chi_prime(l, flow.times),
        amplitudes=amplitudes, phases=phases, L=L, admissibility=admissibility,
    )
    logger.debug("Chart %d: ρ=%.4e, ‖R̊_ℓ‖/ρ=%.3f, %d samples", l, rho, admissibility, len(flow.indices))
    return chart


def _accumulate(target: np.ndarray, chart: ChartData, values: np.ndarray) -> None:
    target[chart.indices] += chart.chi[:, None, None] * values


def build_w_o(charts: list[ChartData], grid: Grid, time_grid: TimeGrid) -> VectorField2:
    """Σ χ_l Σ_{±k} a ik φ e = Σ χ_l Σ_{k∈Λ⁺} -2 a k Im(φ e)."""
    out1 = np.zeros((time_grid.n_t, grid.N, grid.N))
    out2 = np.zeros_like(out1)
    for chart in charts:
        for k in chart.family.plus_set:
            im = (chart.modulated(k) * chart.carrier(k)).imag
            _accumulate(out1, chart, -2.0 * float(k[0]) * im)
            _accumulate(out2, chart, -2.0 * float(k[1]) * im)
    return VectorField2(ScalarField(grid, out1), ScalarField(grid, out2))


def build_w_c(charts: list[ChartData], grid: Grid, time_grid: TimeGrid) -> VectorField2:
    """-Σ χ_l λ⁻¹ Σ_{±k} ∇⊥(a φ) e."""
    out1 = np.zeros((time_grid.n_t, grid.N, grid.N))
    out2 = np.zeros_like(out1)
    for chart in charts:
        for k in chart.family.plus_set:
            slow = grad_perp(ScalarField(grid, chart.modulated(k)))
            e = chart.carrier(k)
            _accumulate(out1, chart, -2.0 / chart.lam * (slow.u1.values * e).real)
            _accumulate(out2, chart, -2.0 / chart.lam * (slow.u2.values * e).real)
    return VectorField2(ScalarField(grid, out1), ScalarField(grid, out2))


def build_w(charts: list[ChartData], grid: Grid, time_grid: TimeGrid) -> VectorField2:
    """w = ∇⊥ψ_w with ψ_w = -Σ χ_l λ⁻¹ Σ_{±k} a φ e."""
    stream = np.zeros((time_grid.n_t, grid.N, grid.N))
    for chart in charts:
        for k in chart.family.plus_set:
            _accumulate(stream, chart, -2.0 / chart.lam * (chart.modulated(k) * chart.carrier(k)).real)
    return grad_perp(ScalarField(grid, stream))


def represent_w(charts: list[ChartData], grid: Grid, time_grid: TimeGrid) -> VectorField2:
    """Σ χ_l Σ_{±k} L_kl φ_kl e_k."""
    out1 = np.zeros((time_grid.n_t, grid.N, grid.N))
    out2 = np.zeros_like(out1)
    for chart in charts:
        for k in chart.family.plus_set:
            wave = chart.phases[k].values * chart.carrier(k)
            _accumulate(out1, chart, 2.0 * (chart.L[k].u1.values * wave).real)
            _accumulate(out2, chart, 2.0 * (chart.L[k].u2.values * wave).real)
    return VectorField2(ScalarField(grid, out1), ScalarField(grid, out2))


def interaction_pairs(charts: list[ChartData]):
    """Non-antipodal (chart, k, other, k', weight), k ∈ Λ⁺; weight 2 between adjacent charts."""
    by_l = {chart.l: chart for chart in charts}
    for chart in charts:
        for other in (chart, by_l.get(chart.l + 1)):
            if other is None:
                continue
            weight = 1.0 if other is chart else 2.0
            for k in chart.family.plus_set:
                for kk in other.family.full_set:
                    if other is chart and kk == negate(k):
                        continue
                    yield chart, k, other, kk, weight


def pair_amplitude(chart: ChartData, k: Direction, other: ChartData, kk: Direction):
    """(shared samples, χ_l χ_l' a_kl a_k'l' φ_kl φ_k'l', e^{iλ(k+k')⊥·x})."""
    common, i1, i2 = np.intersect1d(chart.indices, other.indices, return_indices=True)
    chi = chart.chi[i1] * other.chi[i2]
    A = chi[:, None, None] * chart.modulated(k)[i1] * other.modulated(kk)[i2]
    m1, m2 = chart.wavevector(k)
    n1, n2 = other.wavevector(kk)
    x1, x2 = chart.grid.nodes
    return common, A, np.exp(1j * ((m1 + n1) * x1 + (m2 + n2) * x2))


def build_pressure_correction(charts: list[ChartData], grid: Grid, time_grid: TimeGrid) -> ScalarField:
    P = np.zeros((time_grid.n_t, grid.N, grid.N))
    for chart, k, other, kk, weight in interaction_pairs(charts):
        coefficient = pair_pressure(k, kk)
        if coefficient == 0.0:
            continue
        common, A, E = pair_amplitude(chart, k, other, kk)
        P[common] += weight * coefficient * (A * E).real
    return ScalarField(grid, P)


@dataclass(frozen=True)
class PerturbationBundle:
    w_o: VectorField2
    w_c: VectorField2
    w: VectorField2
    P: ScalarField
    charts: list
    lam: int
    partition: TimePartition
    corrector_defect: float
    representation_defect: float
    divergence_defect: float

    def norms(self) -> dict:
        L_sup = max((sup_norm(L) for chart in self.charts for L in chart.L.values()), default=0.0)
        a_sup = max((sup_norm(a) for chart in self.charts for a in chart.amplitudes.values()), default=0.0)
        return {
            "w_o": sup_norm(self.w_o), "w_c": sup_norm(self.w_c), "w": sup_norm(self.w),
            "P": sup_norm(self.P), "a": a_sup, "L": L_sup,
        }


def build_perturbation(charts: list[ChartData], partition: TimePartition, lam: int, grid: Grid,
                       time_grid: TimeGrid) -> PerturbationBundle:
    w = build_w(charts, grid, time_grid)
    w_o = build_w_o(charts, grid, time_grid)
    w_c = w - w_o
    corrector_defect = sup_norm(w_c - build_w_c(charts, grid, time_grid))
    representation_defect = sup_norm(w - represent_w(charts, grid, time_grid))
    scale = max(sup_norm(w), np.finfo(float).tiny)
    divergence_defect = sup_norm(divergence(w)) / scale
    P = build_pressure_correction(charts, grid, time_grid)
    logger.debug(
        "Perturbation: ‖w_o‖=%.3e ‖w_c‖=%.3e ‖P‖=%.3e, corrector defect %.2e, div %.2e",
        sup_norm(w_o), sup_norm(w_c), sup_norm(P), corrector_defect, divergence_defect,
    )
    return PerturbationBundle(
        w_o, w_c, w, P, charts, lam, partition, corrector_defect, representation_defect, divergence_defect,
    )
