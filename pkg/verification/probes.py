"""
Decay-law probes on synthetic inputs: each measures a quantity over a ladder of
frequencies λ, fits the log-log slope and compares it with the exponent the
corresponding estimate allows.

    anti-divergence     ‖R(a cos(λk·x) e)‖_α        ≲ λ^{α-1}
    forced-heat         ‖θ‖_{L^∞L²} for a cos(λk·x)  ≲ λ^{-1}
    stationary-phase    |∫ a e^{iλk·x}| for a ∈ C²   ≲ λ^{-2}
"""
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from building_blocks.anti_divergence import oscillatory_antidiv_norm
from building_blocks.stationary_phase import stationary_phase_probe
from common.math_utils import fit_loglog_slope
from common.torus_fields import Grid, ScalarField, VectorField2, l2_norm
from evolution.time_grid import TimeGrid
from evolution.transport_diffusion import OscillatoryForcing, solve_transport_diffusion

logger = logging.getLogger(__name__)

SLOPE_TOL = 0.15
STATIONARY_PHASE_TOL = 0.2

_E1 = (Fraction(1), Fraction(0))


@dataclass(frozen=True)
class ProbeResult:
    name: str
    lambdas: tuple
    values: tuple
    slope: float
    ceiling: float

    @property
    def passed(self) -> bool:
        return bool(self.slope <= self.ceiling)

    def rows(self) -> list[dict]:
        return [
            {"probe": self.name, "lambda": lam, "value": value, "slope": self.slope,
             "ceiling": self.ceiling, "passed": self.passed}
            for lam, value in zip(self.lambdas, self.values)
        ]


def _result(name: str, lambdas, values, ceiling: float) -> ProbeResult:
    slope = fit_loglog_slope(lambdas, values)
    logger.info("Probe %s: slope %.3f (ceiling %.3f)", name, slope, ceiling)
    return ProbeResult(name, tuple(lambdas), tuple(values), slope, ceiling)


def anti_divergence_probe(alphas=(0.0, 0.3), lambdas=(8, 16, 32), N: int = 128) -> list[ProbeResult]:
    grid = Grid(N)
    a = ScalarField.from_function(grid, lambda x1, x2: 1.0 + 0.5 * np.cos(x1 + x2))
    return [
        _result(
            f"anti-divergence alpha={alpha:g}", lambdas,
            [oscillatory_antidiv_norm(a, (1, 0), lam, alpha) for lam in lambdas],
            alpha - 1 + SLOPE_TOL,
        )
        for alpha in alphas
    ]


def forced_heat_probe(lambdas=(10, 20, 40, 80), N: int = 256, n_t: int = 17) -> list[ProbeResult]:
    """θ from zero data under a slow shear with forcing a cos(λx₁)."""
    grid, time_grid = Grid(N), TimeGrid(n_t)
    x1, x2 = grid.nodes
    shape = (n_t, N, N)
    v = VectorField2(
        ScalarField(grid, np.broadcast_to(0.1 * np.sin(x2), shape).copy()),
        ScalarField(grid, np.zeros(shape)),
    )
    a = ScalarField.from_function(grid, lambda y1, y2: 1.0 + 0.5 * np.cos(y2))
    sizes = []
    for lam in lambdas:
        theta = solve_transport_diffusion(
            v, ScalarField.zeros(grid), time_grid, forcing=OscillatoryForcing.cosine(a, _E1, lam),
        )
        sizes.append(float(np.max(l2_norm(theta))))
    return [_result("forced-heat", lambdas, sizes, -1 + SLOPE_TOL)]


def stationary_phase_decay_probe(lambdas=(8, 16, 32, 64), N: int = 256) -> list[ProbeResult]:
    """|sin(x₁/2)|³ is C² but not C³ on the torus."""
    grid = Grid(N)
    a = ScalarField.from_function(grid, lambda x1, x2: np.abs(np.sin(x1 / 2)) ** 3)
    table = stationary_phase_probe(a, (1, 0), lambdas)
    logger.info("Probe stationary-phase: slope %.3f", table.slope)
    return [ProbeResult("stationary-phase", table.lambdas, table.values, table.slope, -2 + STATIONARY_PHASE_TOL)]


PROBES = {
    "anti-divergence": anti_divergence_probe,
    "forced-heat": forced_heat_probe,
    "stationary-phase": stationary_phase_decay_probe,
}


def scaling_probe_suite(names=None) -> list[ProbeResult]:
    """
    Runs the named probes (all of them by default).

    Raises:
        KeyError: an unknown probe name.
    """
    names = list(PROBES) if names is None else list(names)
    unknown = [name for name in names if name not in PROBES]
    if unknown:
        raise KeyError(f"Unknown probe(s) {unknown}; available: {sorted(PROBES)}")
    results = []
    for name in names:
        results.extend(PROBES[name]())
    return results
