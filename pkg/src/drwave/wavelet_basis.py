"""
Tensor-product Haar multiresolution analysis on the unit cube.

Every object here lives on dyadic cells. A resolution ``k = 2**(j*d)`` splits
``[0, 1)^d`` into ``k`` congruent cubes of side ``2**-j``; the scaling space
``V_k`` is the span of their indicators, and the projection kernel is

    K_k(x, y) = k * 1[x and y share a level-j cell].

Cells are addressed by a flat row-major index over the per-axis cell
coordinates. A coordinate equal to 1 belongs to the last cell on that axis
(left-closed cells, closed at the right boundary).

Projections of piecewise-constant functions and of finite Haar series are
exact. Generic callables are projected with a fixed 16-point midpoint rule per
cell and axis, which is approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError

__all__ = [
    "DyadicResolution",
    "PiecewiseConstantFn",
    "WaveletSeriesFunction",
    "as_points",
    "cell_index",
    "kernel_eval",
    "project",
    "eval_series",
    "inner_product",
    "detail_coefficients",
    "MAX_SERIES_LEVEL",
    "QUADRATURE_POINTS",
]

# Finest detail level a series may carry. Points are digitised to 62 bits.
MAX_SERIES_LEVEL = 48
# Midpoint nodes per cell and axis when projecting a generic callable.
QUADRATURE_POINTS = 16


# =============================================================================
# Resolutions and points
# =============================================================================


@dataclass(frozen=True)
class DyadicResolution:
    """Dyadic projection space ``V_k`` with ``k = 2**(level*dim)``.

    Parameters
    ----------
    level : int
        Dyadic level ``j >= 0``.
    dim : int
        Ambient dimension ``d >= 1``.
    """

    level: int
    dim: int = 1

    def __post_init__(self) -> None:
        if int(self.level) != self.level or self.level < 0:
            raise DomainError(f"level must be a nonnegative integer, got {self.level}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def size(self) -> int:
        """Number of cells ``k``."""
        return 1 << (self.level * self.dim)

    @property
    def cells_per_axis(self) -> int:
        return 1 << self.level

    @property
    def regularity(self) -> int:
        """Regularity ``S`` of the basis; Haar has ``S = 1``."""
        return 1

    @classmethod
    def from_size(cls, k: float, dim: int = 1) -> "DyadicResolution":
        """Nearest dyadic resolution to a real target ``k``.

        The level is ``round(log2(k) / d)`` with halves rounded up, clamped
        at zero.
        """
        if not np.isfinite(k) or k <= 0:
            raise DomainError(f"target size must be positive and finite, got {k}")
        level = math.floor(math.log2(k) / dim + 0.5)
        return cls(max(level, 0), dim)

    def __str__(self) -> str:
        return f"k={self.size} (j={self.level}, d={self.dim})"


def as_points(x: ArrayLike, dim: int, check: bool = True) -> NDArray[np.float64]:
    """Coerce ``x`` to an ``(n, dim)`` float array of points.

    For ``dim == 1`` a scalar or a flat array is accepted. For ``dim > 1`` a
    single point may be passed as a length-``dim`` vector.
    """
    arr = np.asarray(x, dtype=np.float64)
    if dim == 1 and arr.ndim <= 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DomainError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    if check and arr.size and not np.all((arr >= 0.0) & (arr <= 1.0)):
        raise DomainError("points must lie in the closed unit cube")
    return arr


def _axis_cells(points: NDArray[np.float64], level: int) -> NDArray[np.int64]:
    m = 1 << level
    c = np.floor(points * m).astype(np.int64)
    np.minimum(c, m - 1, out=c)
    return c


def _flatten_cells(coords: NDArray[np.int64], level: int) -> NDArray[np.int64]:
    dim = coords.shape[1]
    if dim == 1:
        return coords[:, 0].copy()
    flat = coords[:, 0].copy()
    for i in range(1, dim):
        flat <<= level
        flat += coords[:, i]
    return flat


def cell_index(x: ArrayLike, res: DyadicResolution, check: bool = True) -> NDArray[np.int64]:
    """Flat row-major index of the level-``j`` cell containing each point."""
    pts = as_points(x, res.dim, check=check)
    return _flatten_cells(_axis_cells(pts, res.level), res.level)


def cell_centers(res: DyadicResolution) -> NDArray[np.float64]:
    """Centres of all cells in flat-index order, shape ``(k, d)``."""
    m = res.cells_per_axis
    axis = (np.arange(m) + 0.5) / m
    grids = np.meshgrid(*([axis] * res.dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


# =============================================================================
# Piecewise-constant functions (elements of V_k)
# =============================================================================


@dataclass(frozen=True)
class PiecewiseConstantFn:
    """Element of ``V_k`` stored as one value per dyadic cell.

    Parameters
    ----------
    resolution : DyadicResolution
    values : array_like
        ``k`` cell values in flat row-major cell order.
    """

    resolution: DyadicResolution
    values: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        if vals.size != self.resolution.size:
            raise DomainError(
                f"{self.resolution} needs {self.resolution.size} values, got {vals.size}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.resolution.dim

    @property
    def level(self) -> int:
        return self.resolution.level

    def __call__(self, x: ArrayLike) -> NDArray[np.float64] | float:
        pts = as_points(x, self.dim)
        out = self.values[cell_index(pts, self.resolution, check=False)]
        return float(out[0]) if np.ndim(x) == (0 if self.dim == 1 else 1) else out

    def grid(self) -> NDArray[np.float64]:
        """Cell values as a ``(2**j,) * d`` array."""
        return self.values.reshape((self.resolution.cells_per_axis,) * self.dim)

    def at_level(self, level: int) -> "PiecewiseConstantFn":
        """Exact projection onto another level (refine by copying, coarsen by averaging)."""
        if level == self.level:
            return self
        res = DyadicResolution(level, self.dim)
        g = self.grid()
        if level > self.level:
            r = 1 << (level - self.level)
            for ax in range(self.dim):
                g = np.repeat(g, r, axis=ax)
            return PiecewiseConstantFn(res, g.ravel())
        r = 1 << (self.level - level)
        m = res.cells_per_axis
        g = g.reshape(sum(((m, r) for _ in range(self.dim)), ()))
        return PiecewiseConstantFn(res, g.mean(axis=tuple(range(1, 2 * self.dim, 2))).ravel())

    def integral(self) -> float:
        return float(self.values.sum() / self.resolution.size)

    def l2_norm(self) -> float:
        return math.sqrt(float(np.dot(self.values, self.values)) / self.resolution.size)

    def __add__(self, other: "PiecewiseConstantFn") -> "PiecewiseConstantFn":
        a, b = _common_level(self, other)
        return PiecewiseConstantFn(a.resolution, a.values + b.values)

    def __sub__(self, other: "PiecewiseConstantFn") -> "PiecewiseConstantFn":
        a, b = _common_level(self, other)
        return PiecewiseConstantFn(a.resolution, a.values - b.values)

    def __mul__(self, other: Union["PiecewiseConstantFn", float]) -> "PiecewiseConstantFn":
        if isinstance(other, PiecewiseConstantFn):
            a, b = _common_level(self, other)
            return PiecewiseConstantFn(a.resolution, a.values * b.values)
        return PiecewiseConstantFn(self.resolution, self.values * float(other))

    __rmul__ = __mul__

    @classmethod
    def constant(cls, value: float, res: DyadicResolution) -> "PiecewiseConstantFn":
        return cls(res, np.full(res.size, float(value)))


def _common_level(
    f: PiecewiseConstantFn, g: PiecewiseConstantFn
) -> tuple[PiecewiseConstantFn, PiecewiseConstantFn]:
    if f.dim != g.dim:
        raise DomainError(f"dimension mismatch: {f.dim} vs {g.dim}")
    level = max(f.level, g.level)
    return f.at_level(level), g.at_level(level)


# =============================================================================
# Finite Haar series (Hölder-ball constructions)
# =============================================================================


def _chunk_width(dim: int) -> int:
    return max(1, 12 // dim)


def _chunk_table(weights: NDArray[np.float64], dim: int, width: int) -> NDArray[np.float64]:
    """Series contribution of ``width`` consecutive levels for each packed bit pattern.

    The packed index holds ``width`` bits per axis, axis 0 in the high bits and
    the coarsest level in the high bit of each field. On one level the sum over
    the ``2**d - 1`` tensor details at a point is ``2**d`` when every axis sits in
    the left half of its detail support and ``-1`` otherwise.
    """
    idx = np.arange(1 << (width * dim), dtype=np.int64)
    mask = (1 << width) - 1
    fields = [(idx >> (width * (dim - 1 - i))) & mask for i in range(dim)]
    table = np.zeros(idx.size)
    hi = float((1 << dim) - 1)
    for t, w in enumerate(weights):
        if w == 0.0:
            continue
        any_right = np.zeros(idx.size, dtype=bool)
        for f in fields:
            any_right |= ((f >> (width - 1 - t)) & 1).astype(bool)
        table += w * np.where(any_right, -1.0, hi)
    return table


@dataclass(frozen=True)
class _SeriesKernel:
    """Precomputed lookup tables evaluating a Haar series with a few gathers."""

    dim: int
    width: int
    total_levels: int
    tables: tuple[NDArray[np.float64], ...]

    @classmethod
    def build(cls, level_weights: NDArray[np.float64], dim: int) -> "_SeriesKernel":
        width = _chunk_width(dim)
        n_chunks = max(1, -(-level_weights.size // width))
        padded = np.zeros(n_chunks * width)
        padded[: level_weights.size] = level_weights
        tables = tuple(
            _chunk_table(padded[c * width : (c + 1) * width], dim, width)
            for c in range(n_chunks)
        )
        return cls(dim, width, n_chunks * width, tables)

    def __call__(self, pts: NDArray[np.float64]) -> NDArray[np.float64]:
        u = _axis_cells(pts, self.total_levels)
        mask = (1 << self.width) - 1
        out = np.zeros(pts.shape[0])
        for c, table in enumerate(self.tables):
            shift = self.total_levels - (c + 1) * self.width
            packed = (u[:, 0] >> shift) & mask
            for i in range(1, self.dim):
                packed <<= self.width
                packed |= (u[:, i] >> shift) & mask
            out += table[packed]
        return out


@dataclass(frozen=True)
class WaveletSeriesFunction:
    """Truncated Haar series with every detail coefficient at the Hölder-ball edge.

    The function is

        offset + eps * sum_{l=J0}^{L} sum_m sum_iota 2**(-l(alpha + d/2)) Psi^iota_{lm}(x),

    so each level-``l`` coefficient equals ``eps * 2**(-l(alpha + d/2))`` and the
    level-``l`` block contributes ``eps * 2**(-l*alpha) * (2**d * 1[all axes left] - 1)``
    at ``x``.

    Parameters
    ----------
    smoothness : float
        Hölder exponent ``alpha``; Haar mode requires ``0 < alpha < 1``.
    amplitude : float
        ``eps >= 0``.
    max_level : int
        Truncation level ``L``.
    dim : int
    offset : float
        Constant shift; lies in every ``V_k`` so it never changes a projection residual.
    base_level : int
        Coarsest detail level ``J0``.
    """

    smoothness: float
    amplitude: float
    max_level: int = 12
    dim: int = 1
    offset: float = 0.0
    base_level: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.smoothness < 1.0:
            raise DomainError(
                f"Haar mode needs 0 < smoothness < 1 (regularity 1), got {self.smoothness}"
            )
        if self.amplitude < 0 or not np.isfinite(self.amplitude):
            raise DomainError(f"amplitude must be finite and >= 0, got {self.amplitude}")
        if not 0 <= self.base_level <= self.max_level <= MAX_SERIES_LEVEL:
            raise DomainError(
                f"need 0 <= base_level <= max_level <= {MAX_SERIES_LEVEL}, "
                f"got {self.base_level}, {self.max_level}"
            )
        if self.dim < 1:
            raise DomainError(f"dim must be >= 1, got {self.dim}")

    def level_weights(self, upto: int | None = None) -> NDArray[np.float64]:
        """``eps * 2**(-l*alpha)`` for ``l = 0..L``, zero below ``J0`` and from ``upto`` on."""
        levels = np.arange(self.max_level + 1)
        w = self.amplitude * np.exp2(-levels * self.smoothness)
        w[: self.base_level] = 0.0
        if upto is not None:
            w[max(upto, 0) :] = 0.0
        return w

    def coefficient(self, level: int) -> float:
        """Magnitude of every detail coefficient at ``level``."""
        if not self.base_level <= level <= self.max_level:
            return 0.0
        return self.amplitude * 2.0 ** (-level * (self.smoothness + self.dim / 2))

    @cached_property
    def _kernel(self) -> _SeriesKernel:
        return _SeriesKernel.build(self.level_weights(), self.dim)

    def __call__(self, x: ArrayLike) -> NDArray[np.float64] | float:
        return eval_series(self, x)

    def sup_deviation(self, from_level: int = 0) -> float:
        """Exact ``sup |f - Pi(f | V_{2^{from_level d}})|`` (attained at the origin)."""
        w = self.level_weights()[max(from_level, 0) :]
        return float(((1 << self.dim) - 1) * w.sum())

    def value_range(self) -> tuple[float, float]:
        """Exact infimum and supremum of the function over the cube."""
        w = self.level_weights()
        return self.offset - float(w.sum()), self.offset + float(((1 << self.dim) - 1) * w.sum())

    def residual_sq_norm(self, level: int) -> float:
        """``||f - Pi(f | V_k)||_2^2`` at ``k = 2**(level*d)`` by Parseval."""
        w = self.level_weights()[max(level, 0) :]
        return float(((1 << self.dim) - 1) * np.dot(w, w))


def eval_series(w: WaveletSeriesFunction, x: ArrayLike) -> NDArray[np.float64] | float:
    """Evaluate a :class:`WaveletSeriesFunction` at points in the unit cube."""
    pts = as_points(x, w.dim)
    out = w.offset + w._kernel(pts)
    return float(out[0]) if np.ndim(x) == (0 if w.dim == 1 else 1) else out


def eval_series_direct(w: WaveletSeriesFunction, x: ArrayLike) -> NDArray[np.float64]:
    """Level-by-level reference evaluation, used to cross-check the table path."""
    pts = as_points(x, w.dim)
    out = np.full(pts.shape[0], float(w.offset))
    hi = float((1 << w.dim) - 1)
    for level, weight in enumerate(w.level_weights()):
        if weight == 0.0:
            continue
        halves = _axis_cells(pts, level + 1) & 1
        out += weight * np.where(halves.any(axis=1), -1.0, hi)
    return out


# =============================================================================
# Kernel, projection, inner product
# =============================================================================


def kernel_eval(res: DyadicResolution, x: ArrayLike, y: ArrayLike) -> NDArray[np.float64] | float:
    """Haar projection kernel ``K_k(x, y)``; vectorised over matching point arrays."""
    cx = cell_index(x, res)
    cy = cell_index(y, res)
    out = np.where(cx == cy, float(res.size), 0.0)
    single = np.ndim(x) == (0 if res.dim == 1 else 1) and np.ndim(y) == np.ndim(x)
    return float(out[0]) if single else out


Projectable = Union[PiecewiseConstantFn, WaveletSeriesFunction, Callable[[NDArray], NDArray]]


def project(f: Projectable, res: DyadicResolution) -> PiecewiseConstantFn:
    """Orthogonal projection ``Pi(f | V_k)`` as cell averages.

    Exact for :class:`PiecewiseConstantFn` and :class:`WaveletSeriesFunction`.
    A generic ``f`` must accept an ``(n, d)`` array and return ``n`` values; its
    cell averages use a 16-point midpoint rule per axis.
    """
    if isinstance(f, PiecewiseConstantFn):
        if f.dim != res.dim:
            raise DomainError(f"dimension mismatch: {f.dim} vs {res.dim}")
        return f.at_level(res.level)
    if isinstance(f, WaveletSeriesFunction):
        if f.dim != res.dim:
            raise DomainError(f"dimension mismatch: {f.dim} vs {res.dim}")
        # Details at levels >= j integrate to zero on every level-j cell.
        partial = _SeriesKernel.build(f.level_weights(upto=res.level), f.dim)
        return PiecewiseConstantFn(res, f.offset + partial(cell_centers(res)))
    q = QUADRATURE_POINTS
    fine = DyadicResolution(res.level, res.dim)
    m = fine.cells_per_axis * q
    axis = (np.arange(m) + 0.5) / m
    grids = np.meshgrid(*([axis] * res.dim), indexing="ij")
    vals = np.asarray(f(np.stack([g.ravel() for g in grids], axis=1)), dtype=np.float64)
    c = fine.cells_per_axis
    vals = vals.reshape(sum(((c, q) for _ in range(res.dim)), ()))
    return PiecewiseConstantFn(res, vals.mean(axis=tuple(range(1, 2 * res.dim, 2))).ravel())


def inner_product(f: PiecewiseConstantFn, g: PiecewiseConstantFn) -> float:
    """Exact ``integral f g dx``; the coarser argument is refined first."""
    a, b = _common_level(f, g)
    return float(np.dot(a.values, b.values) / a.resolution.size)


def detail_coefficients(f: Projectable, level: int, dim: int | None = None) -> NDArray[np.float64]:
    """Haar detail coefficients ``<f, Psi^iota_{lm}>`` at one level.

    Computed by differencing the level-``l+1`` projection, so it is exact
    whenever :func:`project` is. Returns shape ``(2**d - 1, 2**(l d))`` with
    ``iota`` in binary order (axis 0 in the high bit).
    """
    d = getattr(f, "dim", dim)
    if d is None:
        raise DomainError("dim is required for a generic callable")
    fine = project(f, DyadicResolution(level + 1, d)).grid()
    m = 1 << level
    blocks = fine.reshape(sum(((m, 2) for _ in range(d)), ()))
    order = tuple(range(0, 2 * d, 2)) + tuple(range(1, 2 * d, 2))
    blocks = blocks.transpose(order).reshape(m**d, *([2] * d))
    scale = 2.0 ** (level * d / 2) * 2.0 ** (-(level + 1) * d)
    out = np.empty(((1 << d) - 1, m**d))
    signs = np.array([1.0, -1.0])
    for iota in range(1, 1 << d):
        w = np.ones([2] * d)
        for ax in range(d):
            if (iota >> (d - 1 - ax)) & 1:
                shape = [1] * d
                shape[ax] = 2
                w = w * signs.reshape(shape)
        out[iota - 1] = scale * np.tensordot(blocks, w, axes=d)
    return out
