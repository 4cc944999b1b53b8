"""
Parameter schedule of the iteration and the inequalities it has to satisfy.

    δ_q = a^{-b^q},    a^{cb^{q+1}} <= λ_q <= 2a^{cb^{q+1}},    b = (6+γ)/4,  c = 4(5+γ)/(6+γ)
    μ = δ_q^{1/4} λ_q^{1/2} λ_{q+1}^{1/2},    ℓ = δ_q^{-1/4} λ_q^{-1/2} λ_{q+1}^{-1/2}

λ_q is the smallest multiple of 5 above a^{cb^{q+1}} so every phase λk⊥·x is periodic,
and μ is rounded to a positive integer. In toy mode the formula value of λ_q is far too
large to resolve, so λ₀ comes from the run configuration and λ_{q+1} is the smallest
multiple of 5 above lambda_growth·λ_q; δ_q keeps its formula.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from common.errors import ParameterGateError
from common.math_utils import smallest_multiple_at_least
from common.torus_config import BETA, PHASE_DENOMINATOR

logger = logging.getLogger(__name__)

MODES = ("toy", "strict")


@dataclass(frozen=True)
class StageParameters:
    """Everything stage q → q+1 needs from the schedule, rounded values included."""
    q: int
    delta: float
    delta_next: float
    delta_after_next: float
    lambda_q: int
    lambda_next: int
    lambda_q_formula: float
    lambda_next_formula: float
    mu: int
    mu_raw: float
    ell: float
    beta: float = BETA

    def stress_bounds(self) -> dict[str, float]:
        """Shapes of the sup-norm bounds on R⁰..R⁶ and their sum, constants set to 1."""
        d, d1 = self.delta, self.delta_next
        lq, l1, mu, ell = self.lambda_q, self.lambda_next, self.mu, self.ell
        bounds = {
            "R0": d1 ** 0.5 * (mu + 1 / ell) / l1,
            "R1": d1 ** 0.5 * d ** 0.5 * lq / l1,
            "R2": d1 ** 0.5 / l1,
            "R3": d1 * d ** 0.5 * lq / mu,
            "R4": d1 * d ** 0.5 * lq / mu,
            "R5": d1 ** 0.5 * d ** 0.5 * lq * ell,
            "R6": d1 * lq * ell,
        }
        bounds["total"] = d1 ** 0.5 * ((mu + 1 / ell) / l1 + d ** 0.5 * lq * ell + d ** 0.5 * lq / mu)
        return bounds

    def energy_budget(self, energy_constant: float = 1.0) -> float:
        """C(e)μ⁻¹ + δ_{q+1}^{1/2}δ_q^{1/2}λ_qμ⁻¹ + δ_{q+1}^{1/2}ℓ⁻¹λ_{q+1}⁻¹."""
        d, d1 = self.delta, self.delta_next
        return (
            energy_constant / self.mu
            + d1 ** 0.5 * d ** 0.5 * self.lambda_q / self.mu
            + d1 ** 0.5 / (self.ell * self.lambda_next)
        )

    def manifest_entries(self) -> dict:
        return {
            "q": self.q,
            "delta_q": self.delta,
            "delta_q+1": self.delta_next,
            "delta_q+2": self.delta_after_next,
            "lambda_q": self.lambda_q,
            "lambda_q+1": self.lambda_next,
            "lambda_q_formula": self.lambda_q_formula,
            "lambda_q+1_formula": self.lambda_next_formula,
            "mu": self.mu,
            "mu_formula": self.mu_raw,
            "ell": self.ell,
            "beta": self.beta,
        }


@dataclass(frozen=True)
class ParamSchedule:
    a: float
    gamma: float
    mode: str = "toy"
    lambda0: int = 5
    lambda_growth: float = 10
    eta: float = 1.0

    def __post_init__(self):
        if self.a <= 1:
            raise ValueError(f"The base a must exceed 1, got {self.a}")
        if self.gamma <= 0:
            raise ValueError(f"γ must be positive, got {self.gamma}")
        if self.mode not in MODES:
            raise ValueError(f"Unknown mode '{self.mode}', expected one of {MODES}")
        if int(self.lambda0) != self.lambda0 or self.lambda0 < 1:
            raise ValueError(f"λ₀ must be a positive integer, got {self.lambda0}")
        if self.lambda_growth <= 1:
            raise ValueError(f"lambda_growth must exceed 1, got {self.lambda_growth}")

    @property
    def b(self) -> float:
        return (6 + self.gamma) / 4

    @property
    def c(self) -> float:
        return 4 * (5 + self.gamma) / (6 + self.gamma)

    @property
    def beta(self) -> float:
        return BETA

    def delta(self, q: int) -> float:
        return self.a ** (-self.b ** q)

    def lambda_formula(self, q: int) -> float:
        return self.a ** (self.c * self.b ** (q + 1))

    def frequency(self, q: int) -> int:
        """λ_q actually used by the run."""
        if self.mode == "strict":
            return smallest_multiple_at_least(self.lambda_formula(q), PHASE_DENOMINATOR)
        if q == 0:
            return int(self.lambda0)
        return smallest_multiple_at_least(self.lambda_growth * self.frequency(q - 1), PHASE_DENOMINATOR)

    def stage(self, q: int) -> StageParameters:
        lam_q, lam_next = self.frequency(q), self.frequency(q + 1)
        delta = self.delta(q)
        mu_raw = delta ** 0.25 * math.sqrt(lam_q) * math.sqrt(lam_next)
        return StageParameters(
            q=q,
            delta=delta,
            delta_next=self.delta(q + 1),
            delta_after_next=self.delta(q + 2),
            lambda_q=lam_q,
            lambda_next=lam_next,
            lambda_q_formula=self.lambda_formula(q),
            lambda_next_formula=self.lambda_formula(q + 1),
            mu=max(1, int(round(mu_raw))),
            mu_raw=mu_raw,
            ell=1 / mu_raw,
        )


@dataclass(frozen=True)
class ConditionRow:
    name: str
    lhs: float
    rhs: float
    gate: bool = True

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs)


@dataclass(frozen=True)
class ParameterReport:
    q: int
    mode: str
    rows: tuple

    @property
    def gate_holds(self) -> bool:
        return all(row.holds for row in self.rows if row.gate)

    def violations(self) -> list[ConditionRow]:
        return [row for row in self.rows if not row.holds]

    def table(self) -> list[dict]:
        return [
            {"q": self.q, "condition": row.name, "lhs": row.lhs, "rhs": row.rhs,
             "slack": row.slack, "holds": row.holds, "gate": row.gate}
            for row in self.rows
        ]


def _scale_conditions(delta, delta_next, lam_q, lam_next, mu, ell, beta) -> list[ConditionRow]:
    """Conditions on μ, ℓ that the perturbation estimates use, and what the choice of μ, ℓ gives."""
    decay = lam_next ** -beta
    ratio = lam_q ** 0.5 * delta ** 0.25 * lam_next ** -0.5
    return [
        ConditionRow("ell <= 1", ell, 1.0),
        ConditionRow("1 <= lambda_q+1", 1.0, lam_next),
        ConditionRow("delta_q^1/2 lambda_q ell / delta_q+1^1/2 <= 1", delta ** 0.5 * lam_q * ell / delta_next ** 0.5, 1.0),
        ConditionRow("delta_q^1/2 lambda_q / mu + 1/(ell lambda_q+1) <= lambda_q+1^-beta",
                     delta ** 0.5 * lam_q / mu + 1 / (ell * lam_next), decay),
        ConditionRow("1/lambda_q+1 <= delta_q+1^1/2 / mu", 1 / lam_next, delta_next ** 0.5 / mu),
        ConditionRow("1/(delta_q+1^1/2 lambda_q+1) <= 1/mu", 1 / (delta_next ** 0.5 * lam_next), 1 / mu),
        ConditionRow("1/mu <= 1/(delta_q^1/2 lambda_q)", 1 / mu, 1 / (delta ** 0.5 * lam_q)),
        ConditionRow("1/lambda_q+1 <= ell", 1 / lam_next, ell),
        ConditionRow("ell <= 1/lambda_q", ell, 1 / lam_q),
        ConditionRow("chain: lambda_q^1/2 delta_q^1/4 / (lambda_q+1^1/2 delta_q+1^1/2) <= 1", ratio / delta_next ** 0.5, 1.0),
        ConditionRow("chain: lambda_q^1/2 delta_q^1/4 / lambda_q+1^1/2 <= lambda_q+1^-beta / 2", ratio, decay / 2),
    ]


def check_parameter_conditions(schedule: ParamSchedule, q: int) -> ParameterReport:
    """
    Evaluates every parameter inequality of stage q with the values the run uses
    (rounded μ and λ). Gate rows are the ones strict mode insists on; the two closing
    rows compare the new-stress and energy-gap rates against their targets and are
    expected to fail at desk-scale a.
    """
    s = schedule.stage(q)
    rows = _scale_conditions(s.delta, s.delta_next, s.lambda_q, s.lambda_next, s.mu, s.ell, s.beta)

    closed_a = s.delta ** 0.5 * s.lambda_q * s.ell / s.delta_next ** 0.5
    closed_b = s.mu_raw / (s.lambda_next * s.delta_next ** 0.5)
    rows += [
        ConditionRow("delta_q+1 < delta_q", s.delta_next, np.nextafter(s.delta, 0.0)),
        ConditionRow("lambda_q < lambda_q+1", s.lambda_q, s.lambda_next - 1),
        ConditionRow("lambda_q+1 = 0 mod 5", s.lambda_next % PHASE_DENOMINATOR, 0),
        ConditionRow("mu ell = 1 (unrounded)", abs(s.mu_raw * s.ell - 1.0), 1e-12),
        ConditionRow("closed forms of mu/(lambda_q+1 delta_q+1^1/2) agree",
                     abs(closed_a - closed_b) / closed_b, 1e-9),
    ]

    target = s.delta_next ** 0.5 * s.delta ** 0.25 * s.lambda_q ** 0.5 * s.lambda_next ** -0.5
    rows += [
        ConditionRow("stress closes: delta_q+1^1/2 delta_q^1/4 (lambda_q/lambda_q+1)^1/2 <= eta delta_q+2",
                     target, schedule.eta * s.delta_after_next, gate=False),
        ConditionRow("energy closes: delta_q^1/4 delta_q+1^1/2 (lambda_q/lambda_q+1)^1/2 <= delta_q+1/4",
                     target, s.delta_next / 4, gate=False),
    ]
    report = ParameterReport(q, schedule.mode, tuple(rows))
    for row in report.violations():
        logger.info("q=%d: '%s' fails (lhs %.3e > rhs %.3e)", q, row.name, row.lhs, row.rhs)
    return report


def enforce_gate(schedule: ParamSchedule, q: int) -> ParameterReport:
    """
    Returns the report of stage q; strict mode refuses to go on when a gate row fails.

    Raises:
        ParameterGateError: strict mode and some gate inequality is violated.
    """
    report = check_parameter_conditions(schedule, q)
    if schedule.mode == "strict" and not report.gate_holds:
        failed = ", ".join(row.name for row in report.violations() if row.gate)
        raise ParameterGateError(f"Parameter inequalities fail at q={q}: {failed}", report)
    return report


def _formula_margin(a: float, gamma: float, stages) -> float:
    """min over the gate conditions of log(rhs/lhs), with unrounded λ_q = a^{cb^{q+1}} and μ."""
    b = (6 + gamma) / 4
    c = 4 * (5 + gamma) / (6 + gamma)
    margin = np.inf
    for q in stages:
        delta, delta_next = a ** (-b ** q), a ** (-b ** (q + 1))
        lam_q, lam_next = a ** (c * b ** (q + 1)), a ** (c * b ** (q + 2))
        mu = delta ** 0.25 * lam_q ** 0.5 * lam_next ** 0.5
        for row in _scale_conditions(delta, delta_next, lam_q, lam_next, mu, 1 / mu, BETA):
            margin = min(margin, math.log(row.rhs / row.lhs))
    return margin


def minimal_base(gamma: float, stages=(0, 1), lower: float = 1.0 + 1e-9, upper: float = 1e4) -> float:
    """
    Smallest a in [lower, upper] above which the gate conditions hold for the given
    stages, located by bracketing the zero of the worst log-margin.

    Raises:
        ValueError: the conditions still fail at `upper`.
    """
    if _formula_margin(lower, gamma, stages) >= 0.0:
        return lower
    if _formula_margin(upper, gamma, stages) < 0.0:
        raise ValueError(f"Parameter conditions fail even at a={upper:g} for γ={gamma}")
    a_min = brentq(lambda a: _formula_margin(a, gamma, stages), lower, upper, xtol=1e-10, rtol=1e-12)
    logger.debug("a_min(γ=%g) = %.6g over stages %s", gamma, a_min, tuple(stages))
    return float(a_min)
