from dataclasses import dataclass
from functools import cached_property

import numpy as np

from common.math_utils import cubic_time_interpolate


@dataclass(frozen=True)
class TimeGrid:
    """Uniform samples t_j = j/(n_t - 1) of [0, 1]."""
    n_t: int

    def __post_init__(self):
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise ValueError(f"A time grid needs at least 2 samples, got {self.n_t}")

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_t)

    @property
    def dt(self) -> float:
        return 1.0 / (self.n_t - 1)

    def index_of(self, t: float) -> int:
        """Nearest sample index."""
        return int(np.clip(round(t / self.dt), 0, self.n_t - 1))

    def window(self, lo: float, hi: float) -> np.ndarray:
        """Indices j with lo < t_j < hi."""
        t = self.times
        return np.nonzero((t > lo) & (t < hi))[0]

    def sample_at(self, values: np.ndarray, t: float) -> np.ndarray:
        """
        Cubic-in-time value of a sampled series (leading axis = this grid) at time t.
        Arrays without a time axis matching n_t are treated as constant in time.
        """
        values = np.asarray(values)
        if values.ndim < 3 or values.shape[0] != self.n_t:
            return values
        j = self.index_of(t)
        if abs(t - self.times[j]) < 1e-14:
            return values[j]
        return cubic_time_interpolate(values, self.times, t)
