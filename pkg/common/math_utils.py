import numpy as np
from scipy.integrate import simpson


def lagrange_basis(points_x: list[float], i: int, x: float) -> float:
    """
    Computes the Lagrange basis polynomial L_i(x).
    points_x: List of nodes involved in the interpolation [x_0, x_1, ..., x_k].
    i: The i-th basis polynomial L_i is being evaluated.
    x: The point to be evaluated.
    """
    xi = points_x[i]
    numerator = 1.0
    denominator = 1.0

    for j, xj in enumerate(points_x):
        if i == j:
            continue
        numerator *= x - xj
        denominator *= xi - xj

    if denominator == 0.0:
        raise ValueError("Interpolation nodes must be distinct")
    return numerator / denominator


def interpolate_polynomial(points_x: list[float], values: list, x: float):
    """
    Evaluates the interpolating polynomial through (points_x[i], values[i]) at x.
    values may be arrays (whole field slices); the result has their shape.
    """
    if not points_x:
        raise ValueError("Point set cannot be empty")
    if len(points_x) != len(values):
        raise ValueError("Need exactly one value per interpolation node")

    result = 0.0
    for i in range(len(points_x)):
        result = result + lagrange_basis(points_x, i, x) * values[i]
    return result


def cubic_time_interpolate(samples: np.ndarray, times: np.ndarray, t: float) -> np.ndarray:
    """
    Four-point (cubic) Lagrange interpolation of a uniformly sampled series along axis 0.
    The stencil is shifted inward at the ends of the time grid.
    """
    n_t = len(times)
    if n_t < 4:
        raise ValueError("Cubic interpolation needs at least 4 time samples")
    dt = times[1] - times[0]
    j = int(np.floor((t - times[0]) / dt))
    start = min(max(j - 1, 0), n_t - 4)
    idx = range(start, start + 4)
    return interpolate_polynomial([times[m] for m in idx], [samples[m] for m in idx], t)


def finite_difference_weights(offsets: list[int], derivative: int = 1) -> np.ndarray:
    """
    Weights w such that sum_j w_j f(x + offsets_j h) = h^derivative f^(derivative)(x) + O(h^len).
    Solved from the Taylor (Vandermonde) system.
    """
    offsets = np.asarray(offsets, dtype=float)
    n = len(offsets)
    if derivative >= n:
        raise ValueError("Stencil too short for the requested derivative")
    vandermonde = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[derivative] = float(np.prod(np.arange(1, derivative + 1)))
    return np.linalg.solve(vandermonde, rhs)


_CENTRAL_OFFSETS = [-2, -1, 0, 1, 2]


def time_derivative(samples: np.ndarray, dt: float) -> np.ndarray:
    """
    Fourth-order accurate d/dt of a series sampled uniformly along axis 0.
    Interior samples use the 5-point central stencil; the two samples at each
    end of the window use one-sided 5-point stencils.
    """
    samples = np.asarray(samples)
    n_t = samples.shape[0]
    if n_t < 5:
        raise ValueError("Fourth-order time differences need at least 5 samples")

    out = np.empty_like(samples)
    central = finite_difference_weights(_CENTRAL_OFFSETS)
    out[2:-2] = sum(w * samples[2 + o:n_t - 2 + o] for w, o in zip(central, _CENTRAL_OFFSETS))

    for j in (0, 1, n_t - 2, n_t - 1):
        start = min(max(j - 2, 0), n_t - 5)
        offsets = [m - j for m in range(start, start + 5)]
        weights = finite_difference_weights(offsets)
        out[j] = sum(w * samples[j + o] for w, o in zip(weights, offsets))
    return out / dt


def cumulative_simpson(values: np.ndarray, dt: float) -> np.ndarray:
    """
    Running integral int_0^{t_j} of a uniformly sampled series (axis 0),
    composite Simpson on every prefix.
    """
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    for j in range(1, len(values)):
        out[j] = simpson(values[: j + 1], dx=dt)
    return out


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(ys <= 0.0):
        raise ValueError("log-log fit needs strictly positive measurements")
    slope, _ = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope)


def smallest_multiple_at_least(value: float, base: int) -> int:
    """Smallest positive integer multiple of base that is >= value."""
    return max(base, base * int(np.ceil(value / base - 1e-12)))
