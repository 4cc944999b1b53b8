import logging
from dataclasses import dataclass

import numpy as np

from building_blocks.stationary_flows import integer_wavevector
from common.errors import GridError
from common.math_utils import fit_loglog_slope
from common.torus_fields import ScalarField

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecayTable:
    """Measured |∫ a e^{iλk·x} dx| per λ, with the fitted log-log slope."""
    lambdas: tuple[int, ...]
    values: tuple[float, ...]
    slope: float

    def rows(self) -> list[dict]:
        return [
            {"lambda": lam, "measured_norm": value, "fitted_slope": self.slope}
            for lam, value in zip(self.lambdas, self.values)
        ]


def oscillatory_integral(a: ScalarField, k, lam: int) -> complex:
    """∫_{T²} a(x) e^{iλk·x} dx = (2π)² â_{-λk}; exact for grid-resolved a."""
    m1, m2 = integer_wavevector(k, lam)
    N = a.grid.N
    if max(abs(m1), abs(m2)) >= N // 2:
        raise GridError(f"Wavevector ({m1}, {m2}) is not resolved on an {N}-grid")
    return complex((2 * np.pi) ** 2 * a.spectrum[(-m1) % N, (-m2) % N])


def stationary_phase_probe(a: ScalarField, k, lambdas) -> DecayTable:
    """
    |∫ a e^{iλk·x} dx| for each λ. For an amplitude with m bounded derivatives
    these decay at least like λ^{-m}; the slope is fitted over the non-zero entries.
    """
    values = tuple(abs(oscillatory_integral(a, k, lam)) for lam in lambdas)
    positive = [(lam, v) for lam, v in zip(lambdas, values) if v > 0.0]
    slope = fit_loglog_slope(*zip(*positive)) if len(positive) >= 2 else float("-inf")
    logger.debug("Stationary phase probe k=%s: values=%s slope=%.3f", k, values, slope)
    return DecayTable(tuple(lambdas), values, slope)
