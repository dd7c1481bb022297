"""
Fold-local Haar projection estimators of the regression functions and density.

With the Haar kernel the regression estimator

    p_hat(x) = (1/n) sum_i A_i K_k(X_i, x) / w(X_i)

is a bucket sum: the value on a cell is ``k / n`` times the total of
``A_i / w(X_i)`` over rows falling in that cell. No design matrix is formed and
empty cells hold zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigurationError, DomainError
from .synthetic_models import Dataset
from .wavelet_basis import DyadicResolution, PiecewiseConstantFn, cell_index

__all__ = [
    "FittedRegressor",
    "FittedDensity",
    "fit_regression",
    "fit_density",
    "prediction_optimal_k",
    "density_resolution",
    "DEFAULT_DENSITY_BOUNDS",
]

DEFAULT_DENSITY_BOUNDS = (0.25, 4.0)


@dataclass(frozen=True)
class FittedDensity:
    """Clamped projection density estimate.

    Attributes
    ----------
    fn : PiecewiseConstantFn
        Estimate with every cell clamped into ``bounds``.
    raw : PiecewiseConstantFn
        Unclamped projection estimate; integrates to one exactly.
    source_fold : int or None
        Fold the estimate was fitted on.
    """

    fn: PiecewiseConstantFn
    raw: PiecewiseConstantFn
    bounds: tuple[float, float]
    source_fold: int | None = None

    @property
    def resolution(self) -> DyadicResolution:
        return self.fn.resolution

    def __call__(self, x: ArrayLike) -> NDArray[np.float64] | float:
        return self.fn(x)


Weight = Union[Literal["uniform", "known"], FittedDensity]


@dataclass(frozen=True)
class FittedRegressor:
    """Piecewise-constant regression estimate on one fold."""

    fn: PiecewiseConstantFn
    source_fold: int | None = None
    weight_mode: str = "uniform"

    @property
    def resolution(self) -> DyadicResolution:
        return self.fn.resolution

    @property
    def values(self) -> NDArray[np.float64]:
        return self.fn.values

    def __call__(self, x: ArrayLike) -> NDArray[np.float64] | float:
        return self.fn(x)


def _response(data: Dataset, response: str | ArrayLike) -> NDArray[np.float64]:
    if isinstance(response, str):
        if response.lower() in ("a", "treatment"):
            return data.a
        if response.lower() in ("y", "outcome"):
            return data.y
        raise DomainError(f"response must be 'A' or 'Y', got {response!r}")
    arr = np.asarray(response, dtype=np.float64).reshape(-1)
    if arr.size != len(data):
        raise DomainError("response length differs from the fold size")
    return arr


def bucket_values(cells: NDArray[np.int64], resp: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    """``k/n`` times per-cell sums of ``resp``; the Haar projection estimator."""
    return np.bincount(cells, weights=resp, minlength=k) * (k / cells.size)


def _weights(data: Dataset, weight: Weight, fold_id: int | None) -> tuple[NDArray | None, str]:
    if isinstance(weight, FittedDensity):
        if fold_id is not None and weight.source_fold == fold_id:
            raise ConfigurationError(
                f"density estimate was fitted on fold {fold_id}, the same fold as the regression"
            )
        return weight.fn.values[cell_index(data.x, weight.resolution, check=False)], "estimated"
    if weight == "uniform":
        return None, "uniform"
    if weight == "known":
        if data.density is None:
            return None, "known"
        return data.density.values[cell_index(data.x, data.density.resolution, check=False)], "known"
    raise ConfigurationError(f"unknown weight mode {weight!r}")


def fit_regression(
    data: Dataset,
    response: str | ArrayLike,
    res: DyadicResolution,
    weight: Weight = "uniform",
    fold_id: int | None = None,
) -> FittedRegressor:
    """Approximate projection estimate of ``E[response | X]`` on one fold.

    Parameters
    ----------
    data : Dataset
        The fitting fold.
    response : {"A", "Y"} or array_like
    res : DyadicResolution
    weight : {"uniform", "known"} or FittedDensity
        Divides each response by ``w(X_i)``: one, the known design density, or
        a density estimate from a different fold.
    fold_id : int, optional
        Label of ``data``; used to reject a density fitted on the same fold.
    """
    if len(data) == 0:
        raise DomainError("cannot fit on an empty fold")
    if data.dim != res.dim:
        raise DomainError(f"data dimension {data.dim} differs from {res}")
    resp = _response(data, response)
    w, mode = _weights(data, weight, fold_id)
    if w is not None:
        resp = resp / w
    cells = cell_index(data.x, res, check=False)
    fn = PiecewiseConstantFn(res, bucket_values(cells, resp, res.size))
    return FittedRegressor(fn, fold_id, mode)


def prediction_optimal_k(alpha: float, n: int, d: int = 1, c: float = 1.0) -> DyadicResolution:
    """Nearest dyadic resolution to ``c * n**(d / (2 alpha + d))``."""
    if alpha <= 0 or n < 2 or c <= 0:
        raise DomainError(f"need alpha > 0, n >= 2, c > 0; got {alpha}, {n}, {c}")
    return DyadicResolution.from_size(c * float(n) ** (d / (2 * alpha + d)), d)


def density_resolution(n: int, gamma: float, d: int = 1, c: float = 1.0) -> DyadicResolution:
    """Nearest dyadic resolution to ``c * (n / log n)**(d / (2 gamma + d))``."""
    if gamma <= 0 or n < 2 or c <= 0:
        raise DomainError(f"need gamma > 0, n >= 2, c > 0; got {gamma}, {n}, {c}")
    return DyadicResolution.from_size(c * (n / math.log(n)) ** (d / (2 * gamma + d)), d)


def fit_density(
    data: Dataset,
    gamma: float,
    c: float = 1.0,
    bounds: tuple[float, float] = DEFAULT_DENSITY_BOUNDS,
    fold_id: int | None = None,
) -> FittedDensity:
    """Projection density estimate clamped into ``[M1, M2]``."""
    if len(data) == 0:
        raise DomainError("cannot fit on an empty fold")
    m1, m2 = bounds
    if not 0 < m1 <= 1 <= m2:
        raise ConfigurationError(f"density bounds must satisfy 0 < M1 <= 1 <= M2, got {bounds}")
    res = density_resolution(max(len(data), 2), gamma, data.dim, c)
    cells = cell_index(data.x, res, check=False)
    raw = PiecewiseConstantFn(res, bucket_values(cells, np.ones(cells.size), res.size))
    clamped = PiecewiseConstantFn(res, np.clip(raw.values, m1, m2))
    return FittedDensity(clamped, raw, (float(m1), float(m2)), fold_id)
