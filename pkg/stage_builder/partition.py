"""
Smooth time partition {χ_l} with Σ_l χ_l² = 1.

    ψ(y) = e^{-1/y} for y > 0,    S(y) = ψ(y) / (ψ(y) + ψ(1 - y))
    b(x) = S((3/4 - |x|) / (1/2))              supported in (-3/4, 3/4), b ≡ 1 on [-1/4, 1/4]
    χ(x) = b(x) / (Σ_j b²(x - j))^{1/2},      χ_l(t) = χ(μt - l)
"""
import logging
from dataclasses import dataclass

import numpy as np

from common.torus_config import PARTITION_PLATEAU, PARTITION_SUPPORT

logger = logging.getLogger(__name__)

_RAMP = PARTITION_SUPPORT - PARTITION_PLATEAU


def _psi(y):
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(y > 0.0, np.exp(-1.0 / np.where(y > 0.0, y, 1.0)), 0.0)


def _psi_prime(y):
    y = np.asarray(y, dtype=float)
    safe = np.where(y > 0.0, y, 1.0)
    return np.where(y > 0.0, _psi(y) / safe ** 2, 0.0)


def smooth_step(y):
    """0 for y <= 0, 1 for y >= 1, C^∞ in between."""
    p, q = _psi(y), _psi(1.0 - np.asarray(y, dtype=float))
    return p / (p + q)


def smooth_step_prime(y):
    y = np.asarray(y, dtype=float)
    p, q = _psi(y), _psi(1.0 - y)
    dp, dq = _psi_prime(y), -_psi_prime(1.0 - y)
    return (dp * q - p * dq) / (p + q) ** 2


def bump(x):
    x = np.asarray(x, dtype=float)
    return smooth_step((PARTITION_SUPPORT - np.abs(x)) / _RAMP)


def bump_prime(x):
    x = np.asarray(x, dtype=float)
    return -np.sign(x) * smooth_step_prime((PARTITION_SUPPORT - np.abs(x)) / _RAMP) / _RAMP


def _neighbours(x):
    base = np.floor(np.asarray(x, dtype=float))
    return [base + j for j in (-1, 0, 1, 2)]


def chi(x):
    x = np.asarray(x, dtype=float)
    total = sum(bump(x - j) ** 2 for j in _neighbours(x))
    return bump(x) / np.sqrt(total)


def chi_prime(x):
    x = np.asarray(x, dtype=float)
    total = sum(bump(x - j) ** 2 for j in _neighbours(x))
    total_prime = sum(2 * bump(x - j) * bump_prime(x - j) for j in _neighbours(x))
    return bump_prime(x) / np.sqrt(total) - 0.5 * bump(x) * total_prime / total ** 1.5


@dataclass(frozen=True)
class TimePartition:
    """Cutoffs χ_l(t) = χ(μt - l) for the charts l = 0..μ covering [0, 1]."""
    mu: int

    def __post_init__(self):
        if int(self.mu) != self.mu or self.mu < 1:
            raise ValueError(f"μ must be a positive integer, got {self.mu}")

    @property
    def charts(self) -> range:
        return range(self.mu + 1)

    def chi(self, l: int, t):
        return chi(self.mu * np.asarray(t, dtype=float) - l)

    def chi_prime(self, l: int, t):
        """d/dt χ_l(t) = μ χ'(μt - l)."""
        return self.mu * chi_prime(self.mu * np.asarray(t, dtype=float) - l)

    def support(self, l: int) -> tuple[float, float]:
        """Open interval containing the support of χ_l."""
        return (l - PARTITION_SUPPORT) / self.mu, (l + PARTITION_SUPPORT) / self.mu

    def window(self, l: int) -> tuple[float, float]:
        """Window |μt - l| < 1 on which the flow map of chart l is solved."""
        return (l - 1) / self.mu, (l + 1) / self.mu

    def sum_of_squares(self, t):
        return sum(self.chi(l, t) ** 2 for l in self.charts)


def build_partition(mu: int) -> TimePartition:
    partition = TimePartition(mu)
    logger.debug("Time partition with μ=%d: %d charts", mu, len(partition.charts))
    return partition
