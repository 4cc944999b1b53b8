"""
Periodic fields on the torus T^2 = [0, 2*pi)^2 sampled on a uniform N x N grid.

Every field stores its physical-space values as an array of shape (..., N, N).
Leading axes are batch axes (in practice: time samples) and every operation
below acts slice-wise on the last two axes, so a time-sampled field is just a
field with a leading time axis.

Fourier coefficients follow the convention f(x) = sum_k f_k e^{i k.x}, k in Z^2,
which is what numpy's fft2 returns after division by N^2.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from common.errors import GridError
from common.torus_config import ACTIVE_MODE_TOL, MIN_GRID_MODES

logger = logging.getLogger(__name__)

_FFT_AXES = (-2, -1)


@dataclass(frozen=True)
class Grid:
    """Uniform N x N discretisation of T^2 with integer wavenumbers."""
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < MIN_GRID_MODES or self.N % 2:
            raise GridError(f"Grid size must be an even integer >= {MIN_GRID_MODES}, got {self.N}")

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.N

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    @cached_property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.arange(self.N) * self.spacing
        return tuple(np.meshgrid(x, x, indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        k = np.fft.fftfreq(self.N, d=1.0 / self.N)
        return tuple(np.meshgrid(k, k, indexing="ij"))

    @cached_property
    def k_squared(self) -> np.ndarray:
        k1, k2 = self.wavenumbers
        return k1 ** 2 + k2 ** 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # 2/3 rule: keep |k_i| < N/3 on both axes
        k1, k2 = self.wavenumbers
        cutoff = self.N / 3
        return (np.abs(k1) < cutoff) & (np.abs(k2) < cutoff)

    def nyquist(self, axis: int) -> np.ndarray:
        return self.wavenumbers[axis] == -self.N // 2


class ScalarField:
    """A (possibly complex, possibly time-sampled) scalar field on a Grid. Immutable."""
    __array_ufunc__ = None

    def __init__(self, grid: Grid, values):
        values = np.asarray(values)
        if values.ndim < 2 or values.shape[-2:] != (grid.N, grid.N):
            raise GridError(f"Values of shape {values.shape} do not fit an {grid.N}x{grid.N} grid")
        view = values.view()
        view.flags.writeable = False
        self.grid = grid
        self.values = view

    # --- construction -------------------------------------------------------------------
    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        x1, x2 = grid.nodes
        return cls(grid, np.broadcast_to(fn(x1, x2), (grid.N, grid.N)).copy())

    @classmethod
    def from_spectrum(cls, grid: Grid, coeffs: np.ndarray, real: bool = True) -> "ScalarField":
        values = np.fft.ifft2(coeffs * grid.N ** 2, axes=_FFT_AXES)
        return cls(grid, values.real if real else values)

    @classmethod
    def zeros(cls, grid: Grid, time_shape: tuple = (), dtype=float) -> "ScalarField":
        return cls(grid, np.zeros(tuple(time_shape) + (grid.N, grid.N), dtype=dtype))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full((grid.N, grid.N), value))

    @classmethod
    def stack(cls, slices: list["ScalarField"]) -> "ScalarField":
        grid = _common_grid(slices)
        return cls(grid, np.stack([s.values for s in slices]))

    # --- views --------------------------------------------------------------------------
    @property
    def time_shape(self) -> tuple:
        return self.values.shape[:-2]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    @cached_property
    def spectrum(self) -> np.ndarray:
        return np.fft.fft2(self.values, axes=_FFT_AXES) / self.grid.N ** 2

    def __getitem__(self, index) -> "ScalarField":
        return ScalarField(self.grid, self.values[index])

    def __len__(self) -> int:
        return self.values.shape[0] if self.time_shape else 1

    @property
    def real(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.real) if not self.is_real else self

    @property
    def imag(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.imag if not self.is_real else np.zeros_like(self.values))

    def conj(self) -> "ScalarField":
        return self if self.is_real else ScalarField(self.grid, self.values.conj())

    def mean(self):
        """Spatial average over T^2, one value per leading index."""
        return self.values.mean(axis=_FFT_AXES)

    def scale_time(self, coefficients) -> "ScalarField":
        """Multiply slice j by coefficients[j] (a function of time only)."""
        coefficients = np.asarray(coefficients)
        return ScalarField(self.grid, self.values * coefficients[..., None, None])

    def dealiased(self) -> "ScalarField":
        return ScalarField.from_spectrum(self.grid, self.spectrum * self.grid.dealias_mask, real=self.is_real)

    # --- arithmetic ---------------------------------------------------------------------
    def _operand(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise GridError("Fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._operand(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._operand(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._operand(other) - self.values)

    def __mul__(self, other):
        if isinstance(other, (VectorField2, SymTraceFreeTensor2Field)):
            return other * self
        return ScalarField(self.grid, self.values * self._operand(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / self._operand(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def __repr__(self) -> str:
        return f"ScalarField(N={self.grid.N}, time_shape={self.time_shape}, dtype={self.values.dtype})"


@dataclass(frozen=True)
class VectorField2:
    """Two scalar components (u1, u2) on a shared grid."""
    u1: ScalarField
    u2: ScalarField
    __array_ufunc__ = None

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise GridError("Vector components must share the same grid")
        if self.u1.values.shape != self.u2.values.shape:
            raise GridError("Vector components must have the same shape")

    @classmethod
    def zeros(cls, grid: Grid, time_shape: tuple = (), dtype=float) -> "VectorField2":
        return cls(ScalarField.zeros(grid, time_shape, dtype), ScalarField.zeros(grid, time_shape, dtype))

    @classmethod
    def stack(cls, slices: list["VectorField2"]) -> "VectorField2":
        return cls(ScalarField.stack([s.u1 for s in slices]), ScalarField.stack([s.u2 for s in slices]))

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @property
    def components(self) -> tuple[ScalarField, ScalarField]:
        return self.u1, self.u2

    @property
    def time_shape(self) -> tuple:
        return self.u1.time_shape

    @property
    def real(self) -> "VectorField2":
        return VectorField2(self.u1.real, self.u2.real)

    @property
    def imag(self) -> "VectorField2":
        return VectorField2(self.u1.imag, self.u2.imag)

    def conj(self) -> "VectorField2":
        return VectorField2(self.u1.conj(), self.u2.conj())

    def __getitem__(self, index) -> "VectorField2":
        return VectorField2(self.u1[index], self.u2[index])

    def mean(self) -> tuple:
        return self.u1.mean(), self.u2.mean()

    def dot(self, other: "VectorField2") -> ScalarField:
        return self.u1 * other.u1 + self.u2 * other.u2

    def scale_time(self, coefficients) -> "VectorField2":
        return VectorField2(self.u1.scale_time(coefficients), self.u2.scale_time(coefficients))

    def __add__(self, other: "VectorField2") -> "VectorField2":
        return VectorField2(self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other: "VectorField2") -> "VectorField2":
        return VectorField2(self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, other) -> "VectorField2":
        return VectorField2(self.u1 * other, self.u2 * other)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField2":
        return VectorField2(-self.u1, -self.u2)


@dataclass(frozen=True)
class SymTraceFreeTensor2Field:
    """
    Symmetric trace-free 2x2 tensor field [[T11, T12], [T12, -T11]].
    Only T11 and T12 are stored, so symmetry and zero trace hold by construction.
    """
    t11: ScalarField
    t12: ScalarField
    __array_ufunc__ = None

    def __post_init__(self):
        if self.t11.grid != self.t12.grid:
            raise GridError("Tensor components must share the same grid")

    @classmethod
    def zeros(cls, grid: Grid, time_shape: tuple = ()) -> "SymTraceFreeTensor2Field":
        return cls(ScalarField.zeros(grid, time_shape), ScalarField.zeros(grid, time_shape))

    @classmethod
    def from_symmetric(cls, a11: ScalarField, a12: ScalarField, a22: ScalarField) -> "SymTraceFreeTensor2Field":
        """Trace-free part of the symmetric tensor [[a11, a12], [a12, a22]]."""
        return cls((a11 - a22) * 0.5, a12)

    @classmethod
    def stack(cls, slices: list["SymTraceFreeTensor2Field"]) -> "SymTraceFreeTensor2Field":
        return cls(ScalarField.stack([s.t11 for s in slices]), ScalarField.stack([s.t12 for s in slices]))

    @property
    def grid(self) -> Grid:
        return self.t11.grid

    @property
    def time_shape(self) -> tuple:
        return self.t11.time_shape

    @property
    def components(self) -> tuple[ScalarField, ScalarField]:
        return self.t11, self.t12

    def full(self) -> np.ndarray:
        """Array of shape (2, 2, ..., N, N) holding the reconstructed matrix."""
        t11, t12 = self.t11.values, self.t12.values
        return np.array([[t11, t12], [t12, -t11]])

    def trace(self) -> np.ndarray:
        full = self.full()
        return full[0, 0] + full[1, 1]

    def apply(self, v: VectorField2) -> VectorField2:
        """Pointwise matrix-vector product T v."""
        return VectorField2(self.t11 * v.u1 + self.t12 * v.u2, self.t12 * v.u1 - self.t11 * v.u2)

    def __getitem__(self, index) -> "SymTraceFreeTensor2Field":
        return SymTraceFreeTensor2Field(self.t11[index], self.t12[index])

    def __add__(self, other: "SymTraceFreeTensor2Field") -> "SymTraceFreeTensor2Field":
        return SymTraceFreeTensor2Field(self.t11 + other.t11, self.t12 + other.t12)

    def __sub__(self, other: "SymTraceFreeTensor2Field") -> "SymTraceFreeTensor2Field":
        return SymTraceFreeTensor2Field(self.t11 - other.t11, self.t12 - other.t12)

    def __mul__(self, other) -> "SymTraceFreeTensor2Field":
        return SymTraceFreeTensor2Field(self.t11 * other, self.t12 * other)

    __rmul__ = __mul__

    def __neg__(self) -> "SymTraceFreeTensor2Field":
        return SymTraceFreeTensor2Field(-self.t11, -self.t12)


AnyField = Union[ScalarField, VectorField2, SymTraceFreeTensor2Field]


def _common_grid(fields) -> Grid:
    grid = fields[0].grid
    if any(f.grid != grid for f in fields):
        raise GridError("Fields live on different grids")
    return grid


def components(field: AnyField) -> tuple[ScalarField, ...]:
    if isinstance(field, ScalarField):
        return (field,)
    return field.components


# --- differential operators ---------------------------------------------------------------

def spectral_derivative(f: ScalarField, multi_index: tuple[int, int]) -> ScalarField:
    """d1^m1 d2^m2 f by wavenumber multiplication; exact for band-limited f."""
    m1, m2 = multi_index
    if m1 < 0 or m2 < 0:
        raise GridError(f"Derivative multi-index must be non-negative, got {multi_index}")
    if m1 == 0 and m2 == 0:
        return f
    grid = f.grid
    k1, k2 = grid.wavenumbers
    symbol = (1j * k1) ** m1 * (1j * k2) ** m2
    # The Nyquist mode has no odd derivative on a real grid
    if m1 % 2:
        symbol = np.where(grid.nyquist(0), 0.0, symbol)
    if m2 % 2:
        symbol = np.where(grid.nyquist(1), 0.0, symbol)
    return ScalarField.from_spectrum(grid, f.spectrum * symbol, real=f.is_real)


def grad(f: ScalarField) -> VectorField2:
    return VectorField2(spectral_derivative(f, (1, 0)), spectral_derivative(f, (0, 1)))


def grad_perp(f: ScalarField) -> VectorField2:
    """nabla^perp f = (-d2 f, d1 f)."""
    return VectorField2(-spectral_derivative(f, (0, 1)), spectral_derivative(f, (1, 0)))


def divergence(v: VectorField2) -> ScalarField:
    return spectral_derivative(v.u1, (1, 0)) + spectral_derivative(v.u2, (0, 1))


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField.from_spectrum(f.grid, -f.grid.k_squared * f.spectrum, real=f.is_real)


def divergence_tensor(T: SymTraceFreeTensor2Field) -> VectorField2:
    """Row-wise divergence (d1 T11 + d2 T12, d1 T12 - d2 T11)."""
    return divergence_matrix(T.t11, T.t12, T.t12, -T.t11)


def divergence_matrix(a11: ScalarField, a12: ScalarField, a21: ScalarField, a22: ScalarField) -> VectorField2:
    """Row-wise divergence of a general 2x2 matrix field."""
    return VectorField2(
        spectral_derivative(a11, (1, 0)) + spectral_derivative(a12, (0, 1)),
        spectral_derivative(a21, (1, 0)) + spectral_derivative(a22, (0, 1)),
    )


def directional_derivative(v: VectorField2, f: ScalarField) -> ScalarField:
    """v . grad f, pointwise product of resolved fields."""
    return v.u1 * spectral_derivative(f, (1, 0)) + v.u2 * spectral_derivative(f, (0, 1))


def advect(v: VectorField2, w: VectorField2) -> VectorField2:
    """(v . grad) w."""
    return VectorField2(directional_derivative(v, w.u1), directional_derivative(v, w.u2))


def symmetric_product(u: VectorField2, w: VectorField2) -> tuple[ScalarField, ScalarField, ScalarField]:
    """Entries (a11, a12, a22) of u (x) w + w (x) u."""
    return u.u1 * w.u1 * 2, u.u1 * w.u2 + u.u2 * w.u1, u.u2 * w.u2 * 2


def highest_active_wavenumber(f: AnyField, tol: float = ACTIVE_MODE_TOL) -> int:
    """Largest |k_i| among modes above tol relative to the largest coefficient."""
    grid = _common_grid(components(f))
    k1, k2 = grid.wavenumbers
    highest = 0
    for c in components(f):
        amplitude = np.abs(c.spectrum)
        if c.time_shape:
            amplitude = amplitude.reshape((-1, grid.N, grid.N)).max(axis=0)
        scale = amplitude.max()
        if scale == 0.0:
            continue
        active = amplitude > tol * scale
        highest = max(highest, int(np.max(np.maximum(np.abs(k1[active]), np.abs(k2[active])))))
    return highest


def active_block(f: ScalarField, tol: float = ACTIVE_MODE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """(ks, f_k on ks x ks) with ks = -K..K up to the highest active wavenumber; Nyquist dropped."""
    grid = f.grid
    K = min(highest_active_wavenumber(f, tol), grid.N // 2 - 1)
    ks = np.arange(-K, K + 1)
    idx = ks % grid.N
    return ks, f.spectrum[..., idx[:, None], idx[None, :]]


def evaluate_block(ks: np.ndarray, block: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """sum_{k1, k2 in ks} block[k1, k2] e^{i(k1 x1 + k2 x2)} at the given points (complex result)."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    e1 = np.exp(1j * np.outer(x1.ravel(), ks))
    e2 = np.exp(1j * np.outer(x2.ravel(), ks))
    return np.sum((e1 @ block) * e2, axis=1).reshape(x1.shape)


def evaluate_at(f: ScalarField, x1: np.ndarray, x2: np.ndarray, tol: float = ACTIVE_MODE_TOL) -> np.ndarray:
    """Spectral interpolation of a single-slice field at arbitrary points, active modes only."""
    if f.time_shape:
        raise GridError("evaluate_at expects a single time slice")
    ks, block = active_block(f, tol)
    values = evaluate_block(ks, block, x1, x2)
    return values.real if f.is_real else values


# --- norms ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldNorms:
    sup: float
    l2: float
    hs: float
    hs_order: float
    c: tuple[float, ...]


def pointwise_magnitude(field: AnyField) -> np.ndarray:
    """|f| for scalars, Euclidean length for vectors, operator norm for trace-free tensors."""
    return np.sqrt(sum(np.abs(c.values) ** 2 for c in components(field)))


def sup_norm(field: AnyField) -> float:
    return float(pointwise_magnitude(field).max())


def sup_norm_per_slice(field: AnyField) -> np.ndarray:
    return pointwise_magnitude(field).max(axis=_FFT_AXES)


def l2_norm(field: AnyField):
    """L^2 norm over T^2 with the flat measure, one value per leading index."""
    grid = components(field)[0].grid
    return np.sqrt((pointwise_magnitude(field) ** 2).sum(axis=_FFT_AXES) * grid.cell_area)


def l2_norm_spectral(field: AnyField):
    """Parseval form of l2_norm: (2 pi)^2 sum_k |f_k|^2."""
    total = sum((np.abs(c.spectrum) ** 2).sum(axis=_FFT_AXES) for c in components(field))
    return np.sqrt(total) * 2 * np.pi


def hs_norm(field: AnyField, s: float):
    """Homogeneous Sobolev norm (sum_{k != 0} |f_k|^2 |k|^{2s})^{1/2}, one value per leading index."""
    if s < 0:
        raise ValueError(f"Sobolev order must be non-negative, got {s}")
    grid = components(field)[0].grid
    k_sq = grid.k_squared
    weight = np.where(k_sq > 0, k_sq, 1.0) ** s
    weight = np.where(k_sq > 0, weight, 0.0)
    total = sum((np.abs(c.spectrum) ** 2 * weight).sum(axis=_FFT_AXES) for c in components(field))
    return np.sqrt(total)


def _multi_indices(m: int) -> list[tuple[int, int]]:
    return [(m1, m - m1) for m1 in range(m + 1)]


def _derivative(field: AnyField, beta: tuple[int, int]) -> list[ScalarField]:
    return [spectral_derivative(c, beta) for c in components(field)]


def c_seminorm(field: AnyField, m: int) -> float:
    """[f]_m = sum_{|beta| = m} ||grad^beta f||_0."""
    if m == 0:
        return sup_norm(field)
    total = 0.0
    for beta in _multi_indices(m):
        total += float(np.sqrt(sum(np.abs(d.values) ** 2 for d in _derivative(field, beta))).max())
    return total


def c_norm(field: AnyField, m: int) -> float:
    """||f||_m = sum_{j <= m} [f]_j."""
    return sum(c_seminorm(field, j) for j in range(m + 1))


def _holder_offsets(N: int, dense_radius: int = 3, max_strided: int = 32) -> list[tuple[int, int]]:
    """Grid offsets with torus length <= pi: every offset near the origin, a strided lattice beyond."""
    stride = max(1, N // max_strided)
    half = N // 2
    offsets = set()
    for o1 in range(0, half + 1):
        for o2 in range(-half + 1, half + 1):
            if o1 == 0 and o2 <= 0:
                continue  # (o1, o2) and (-o1, -o2) probe the same pairs
            near = max(abs(o1), abs(o2)) <= dense_radius
            if not near and (o1 % stride or o2 % stride):
                continue
            if o1 ** 2 + o2 ** 2 <= half ** 2:
                offsets.add((o1, o2))
    return sorted(offsets)


def holder_seminorm(field: AnyField, m: int, alpha: float) -> float:
    """
    [f]_{m+alpha} from grid pairs at torus distance up to pi; a lower bound that
    converges as N grows. alpha = 0 gives the C^m seminorm.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"Hoelder exponent must lie in [0, 1), got {alpha}")
    if alpha == 0.0:
        return c_seminorm(field, m)

    grid = components(field)[0].grid
    h = grid.spacing
    best = 0.0
    for beta in _multi_indices(m):
        derivs = [d.values for d in _derivative(field, beta)]
        for o1, o2 in _holder_offsets(grid.N):
            distance = h * np.hypot(o1, o2)
            diff_sq = sum(np.abs(np.roll(d, (-o1, -o2), axis=_FFT_AXES) - d) ** 2 for d in derivs)
            best = max(best, float(np.sqrt(diff_sq.max())) / distance ** alpha)
    return best


def norms(field: AnyField, s: float = 0.5, max_order: int = 4) -> FieldNorms:
    """sup, L^2 and H^s (both maximised over leading axes) and C^m for m <= max_order."""
    if s < 0:
        raise ValueError(f"Sobolev order must be non-negative, got {s}")
    return FieldNorms(
        sup=sup_norm(field),
        l2=float(np.max(l2_norm(field))),
        hs=float(np.max(hs_norm(field, s))),
        hs_order=s,
        c=tuple(c_norm(field, m) for m in range(max_order + 1)),
    )


def refine(f: ScalarField, factor: int) -> ScalarField:
    """Spectral interpolation onto a grid `factor` times finer (modes |k_i| < N/2 are kept)."""
    if factor < 1 or int(factor) != factor:
        raise GridError(f"Refinement factor must be a positive integer, got {factor}")
    if factor == 1:
        return f
    grid = f.grid
    fine = Grid(grid.N * factor)
    half = grid.N // 2
    keep = np.arange(-half + 1, half)
    src, dst = keep % grid.N, keep % fine.N
    spectrum = np.zeros(f.time_shape + (fine.N, fine.N), dtype=complex)
    spectrum[..., dst[:, None], dst[None, :]] = f.spectrum[..., src[:, None], src[None, :]]
    return ScalarField.from_spectrum(fine, spectrum, real=f.is_real)
