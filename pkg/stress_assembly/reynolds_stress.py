"""
New Reynolds stress R̊₁ = R⁰ + ... + R⁶ and pressure p₁ of a stage.

With v₁ = v + w and R the anti-divergence:

    R⁰ = R(∂_t w + v_ℓ·∇w)
    R¹ = R(w·∇v_ℓ)
    R² = -R((θ₁ - θ)e₂)
    R³ = R(T¹ + T²),   T¹ + T² = div(w_o⊗w_o - Σχ_l² R_ℓ,l + P Id)
    R⁴ = w_o⊗w_c + w_c⊗w_o + w_c⊗w_c - (|w_c|² + 2w_o·w_c)/2 Id
    R⁵ = w⊗(v - v_ℓ) + (v - v_ℓ)⊗w - (v - v_ℓ)·w Id
    R⁶ = R̊ - R̊_ℓ
    p₁ = p + P - (|w_c|² + 2w_o·w_c)/2 - (v - v_ℓ)·w

so that div R̊₁ = ∂_t v₁ + div(v₁⊗v₁) + ∇p₁ - θ₁e₂ whenever the same holds for (v, p, θ, R̊).
T¹ collects the interactions inside one chart and T² those of adjacent charts; both are
built from the chart amplitudes, so no λ-sized factor enters the anti-divergence.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from building_blocks.anti_divergence import anti_divergence
from building_blocks.stationary_flows import pair_pressure
from common.math_utils import time_derivative
from common.torus_fields import (
    ScalarField, SymTraceFreeTensor2Field, VectorField2, advect, c_norm, divergence_matrix,
    divergence_tensor, grad, sup_norm, symmetric_product,
)
from evolution.time_grid import TimeGrid
from scheme.state import StageState
from stage_builder.perturbation import PerturbationBundle, interaction_pairs, pair_amplitude

logger = logging.getLogger(__name__)

STRESS_TERMS = ("R0", "R1", "R2", "R3", "R4", "R5", "R6")


def _time_derivative(series: VectorField2, dt: float) -> VectorField2:
    return VectorField2(*(ScalarField(c.grid, time_derivative(c.values, dt)) for c in series.components))


def transport_derivative(w: VectorField2, v_ell: VectorField2, time_grid: TimeGrid) -> VectorField2:
    """∂_t w + v_ℓ·∇w with fourth-order time differences."""
    return _time_derivative(w, time_grid.dt) + advect(v_ell, w)


def chart_transport_derivative(bundle: PerturbationBundle, v_ell: VectorField2, time_grid: TimeGrid) -> VectorField2:
    """
    The same derivative from the chart decomposition: since e^{iλk⊥·Φ_l} is transported by v_ℓ,

        (∂_t + v_ℓ·∇)w = Σ_l Σ_k Ψ_kl φ_kl e_k,    Ψ_kl = χ_l' L_kl + χ_l (∂_t + v_ℓ·∇)L_kl
    """
    grid = bundle.w.grid
    out1 = np.zeros((time_grid.n_t, grid.N, grid.N))
    out2 = np.zeros_like(out1)
    for chart in bundle.charts:
        v_window = v_ell[chart.indices] if v_ell.time_shape else v_ell
        chi = chart.chi[:, None, None]
        chi_prime = chart.chi_prime[:, None, None]
        for k in chart.family.plus_set:
            L = chart.L[k]
            material = _time_derivative(L, time_grid.dt) + advect(v_window, L)
            wave = chart.phases[k].values * chart.carrier(k)
            for out, Lc, Mc in ((out1, L.u1, material.u1), (out2, L.u2, material.u2)):
                psi = chi_prime * Lc.values + chi * Mc.values
                out[chart.indices] += 2.0 * (psi * wave).real
    return VectorField2(ScalarField(grid, out1), ScalarField(grid, out2))


def build_R0(w: VectorField2, v_ell: VectorField2, time_grid: TimeGrid) -> SymTraceFreeTensor2Field:
    return anti_divergence(transport_derivative(w, v_ell, time_grid))


def build_R1_term(w: VectorField2, v_ell: VectorField2) -> SymTraceFreeTensor2Field:
    return anti_divergence(advect(w, v_ell))


def build_R2_term(theta_new: ScalarField, theta: ScalarField) -> SymTraceFreeTensor2Field:
    mismatch = theta_new - theta
    return -anti_divergence(VectorField2(mismatch * 0.0, mismatch))


def oscillatory_terms(bundle: PerturbationBundle, time_grid: TimeGrid) -> tuple[VectorField2, VectorField2]:
    """
    (T¹, T²) with T = -½Σ[k(k'·∇A) + k'(k·∇A) - (k·k' - 1)∇A] e^{iλ(k+k')⊥·x} over
    non-antipodal pairs, A = χ_l χ_l' a_kl a_k'l' φ_kl φ_k'l'.
    """
    grid = bundle.w.grid
    shape = (time_grid.n_t, grid.N, grid.N)
    same, cross = (np.zeros(shape), np.zeros(shape)), (np.zeros(shape), np.zeros(shape))
    for chart, k, other, kk, weight in interaction_pairs(bundle.charts):
        common, A, E = pair_amplitude(chart, k, other, kk)
        if not len(common):
            continue
        gA = grad(ScalarField(grid, A))
        g1, g2 = gA.u1.values, gA.u2.values
        k1, k2 = float(k[0]), float(k[1])
        n1, n2 = float(kk[0]), float(kk[1])
        c = pair_pressure(k, kk)
        along_kk = n1 * g1 + n2 * g2
        along_k = k1 * g1 + k2 * g2
        target = same if other is chart else cross
        target[0][common] -= weight * ((k1 * along_kk + n1 * along_k - c * g1) * E).real
        target[1][common] -= weight * ((k2 * along_kk + n2 * along_k - c * g2) * E).real
    T1 = VectorField2(ScalarField(grid, same[0]), ScalarField(grid, same[1]))
    T2 = VectorField2(ScalarField(grid, cross[0]), ScalarField(grid, cross[1]))
    return T1, T2


def oscillatory_identity_defect(bundle: PerturbationBundle, R_ell: SymTraceFreeTensor2Field,
                                T1: VectorField2, T2: VectorField2) -> float:
    """
    sup |div(w_o⊗w_o + R̊_ℓ) + ∇P - T¹ - T²|; Σχ_l² ρ_l Id drops out as it is constant in space.
    """
    w = bundle.w_o
    flux = divergence_matrix(w.u1 * w.u1, w.u1 * w.u2, w.u2 * w.u1, w.u2 * w.u2)
    return sup_norm(flux + divergence_tensor(R_ell) + grad(bundle.P) - T1 - T2)


def build_R3_term(bundle: PerturbationBundle, time_grid: TimeGrid):
    """Returns (R³, T¹, T²)."""
    T1, T2 = oscillatory_terms(bundle, time_grid)
    return anti_divergence(T1 + T2), T1, T2


def build_R4_term(w_o: VectorField2, w_c: VectorField2) -> SymTraceFreeTensor2Field:
    a11, a12, a22 = symmetric_product(w_o, w_c)
    return SymTraceFreeTensor2Field.from_symmetric(
        a11 + w_c.u1 * w_c.u1, a12 + w_c.u1 * w_c.u2, a22 + w_c.u2 * w_c.u2,
    )


def build_R5_term(w: VectorField2, v: VectorField2, v_ell: VectorField2) -> SymTraceFreeTensor2Field:
    return SymTraceFreeTensor2Field.from_symmetric(*symmetric_product(w, v - v_ell))


def build_R6_term(R: SymTraceFreeTensor2Field, R_ell: SymTraceFreeTensor2Field) -> SymTraceFreeTensor2Field:
    return R - R_ell


def new_pressure(p: ScalarField, bundle: PerturbationBundle, v: VectorField2, v_ell: VectorField2) -> ScalarField:
    w_o, w_c = bundle.w_o, bundle.w_c
    return p + bundle.P - (w_c.dot(w_c) + w_o.dot(w_c) * 2.0) * 0.5 - (v - v_ell).dot(bundle.w)


@dataclass(frozen=True)
class StressBreakdown:
    terms: dict
    T1: VectorField2
    T2: VectorField2
    oscillatory_defect: float
    transport_defect: float
    bounds: dict = field(default_factory=dict)

    @property
    def total(self) -> SymTraceFreeTensor2Field:
        # fixed summation order
        result = self.terms[STRESS_TERMS[0]]
        for name in STRESS_TERMS[1:]:
            result = result + self.terms[name]
        return result

    def with_bounds(self, bounds: dict) -> "StressBreakdown":
        return StressBreakdown(self.terms, self.T1, self.T2, self.oscillatory_defect, self.transport_defect, bounds)

    def rows(self) -> list[dict]:
        """term, ‖·‖₀, ‖·‖₁, bound shape and their ratio."""
        rows = []
        for name in STRESS_TERMS + ("total",):
            tensor = self.total if name == "total" else self.terms[name]
            sup = sup_norm(tensor)
            bound = self.bounds.get(name, float("nan"))
            rows.append({
                "term": name,
                "sup": sup,
                "c1": c_norm(tensor, 1),
                "bound": bound,
                "ratio": sup / bound if bound and np.isfinite(bound) else float("nan"),
            })
        return rows


def build_stress(bundle: PerturbationBundle, v: VectorField2, v_ell: VectorField2, R: SymTraceFreeTensor2Field,
                 R_ell: SymTraceFreeTensor2Field, theta: ScalarField, theta_new: ScalarField,
                 time_grid: TimeGrid) -> StressBreakdown:
    w = bundle.w
    material = transport_derivative(w, v_ell, time_grid)
    transport_defect = sup_norm(material - chart_transport_derivative(bundle, v_ell, time_grid))
    R3, T1, T2 = build_R3_term(bundle, time_grid)
    terms = {
        "R0": build_R0(w, v_ell, time_grid),
        "R1": build_R1_term(w, v_ell),
        "R2": build_R2_term(theta_new, theta),
        "R3": R3,
        "R4": build_R4_term(bundle.w_o, bundle.w_c),
        "R5": build_R5_term(w, v, v_ell),
        "R6": build_R6_term(R, R_ell),
    }
    breakdown = StressBreakdown(terms, T1, T2, oscillatory_identity_defect(bundle, R_ell, T1, T2), transport_defect)
    logger.debug(
        "Stress terms %s; oscillatory defect %.2e, transport defect %.2e",
        ", ".join(f"{name}={sup_norm(t):.2e}" for name, t in terms.items()),
        breakdown.oscillatory_defect, transport_defect,
    )
    return breakdown



def assemble_stage(state: StageState, bundle: PerturbationBundle, p_new: ScalarField, theta_new: ScalarField,
                   breakdown: StressBreakdown, manifest: dict | None = None) -> StageState:
    """(v + w, p₁, θ₁, R⁰ + ... + R⁶) as the state of stage q + 1."""
    return StageState(
        state.q + 1, state.time_grid, state.v + bundle.w, p_new, theta_new, breakdown.total, dict(manifest or {}),
    )
