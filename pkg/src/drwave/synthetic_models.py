"""
Data-generating processes with bounded outcomes and Haar-series nuisances.

Observations are ``(X, A, Y)`` with

    A = p(X) + sigma_a * W + tau * V_A,
    Y = b(X) + sigma_b * W + tau * V_B,

where ``W`` is a Rademacher sign shared by both outcomes and ``V_A, V_B`` are
independent Uniform[-1, 1]. Hence ``Cov(A, Y | X) = sigma_a * sigma_b = rho``
for every ``x`` and the target ``E[Cov(A, Y | X)]`` is exactly ``rho``.
Outcome bounds are checked once against exact nuisance ranges, so sampling
never clips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, DomainError
from .wavelet_basis import (
    DyadicResolution,
    PiecewiseConstantFn,
    WaveletSeriesFunction,
    as_points,
)

__all__ = [
    "NoiseSpec",
    "DGP",
    "Dataset",
    "sample",
    "true_psi",
    "worst_case_dgp",
    "constant_dgp",
    "make_rng",
]

Nuisance = Union[WaveletSeriesFunction, PiecewiseConstantFn]
DEFAULT_BOUNDS = (-2.0, 2.0)


@dataclass(frozen=True)
class NoiseSpec:
    """Shared-sign plus idiosyncratic bounded noise.

    Attributes
    ----------
    shared_a, shared_b : float
        Loadings of the common Rademacher sign on ``A`` and ``Y``.
    idio : float
        Half-width of the independent uniform noise on each outcome.
    """

    shared_a: float = 0.0
    shared_b: float = 0.0
    idio: float = 0.0

    def __post_init__(self) -> None:
        if self.idio < 0:
            raise ConfigurationError(f"idio must be >= 0, got {self.idio}")

    @property
    def rho(self) -> float:
        return self.shared_a * self.shared_b

    @classmethod
    def from_rho(cls, rho: float, idio: float = 0.0) -> "NoiseSpec":
        """Symmetric loadings ``sqrt|rho|`` carrying the sign of ``rho`` on ``Y``."""
        s = math.sqrt(abs(rho))
        return cls(s, math.copysign(s, rho) if rho != 0 else 0.0, idio)


def _value_range(fn: Nuisance) -> tuple[float, float]:
    if isinstance(fn, WaveletSeriesFunction):
        return fn.value_range()
    return float(fn.values.min()), float(fn.values.max())


@dataclass(frozen=True)
class DGP:
    """A member of the bounded Hölder model with constant conditional covariance.

    Parameters
    ----------
    p, b : WaveletSeriesFunction or PiecewiseConstantFn
        Regression functions ``E[A|X]`` and ``E[Y|X]``.
    noise : NoiseSpec
    bounds : (float, float)
        Almost-sure range ``[C1, C2]`` of ``A`` and ``Y``.
    density : PiecewiseConstantFn, optional
        Design density of ``X``; ``None`` means uniform.
    """

    p: Nuisance
    b: Nuisance
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    bounds: tuple[float, float] = DEFAULT_BOUNDS
    density: PiecewiseConstantFn | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "bounds", (float(self.bounds[0]), float(self.bounds[1])))
        if self.p.dim != self.b.dim:
            raise ConfigurationError(f"p and b dimensions differ: {self.p.dim} vs {self.b.dim}")
        c1, c2 = self.bounds
        if not c1 < c2:
            raise ConfigurationError(f"bounds must satisfy C1 < C2, got {self.bounds}")
        for name, fn, load in (("A", self.p, self.noise.shared_a), ("Y", self.b, self.noise.shared_b)):
            lo, hi = _value_range(fn)
            spread = abs(load) + self.noise.idio
            if lo - spread < c1 - 1e-12 or hi + spread > c2 + 1e-12:
                raise ConfigurationError(
                    f"{name} range [{lo - spread:.6g}, {hi + spread:.6g}] exceeds bounds "
                    f"[{c1:g}, {c2:g}]; lower the amplitude or the noise"
                )
        if self.density is not None:
            f = self.density
            if f.dim != self.dim:
                raise ConfigurationError("density dimension differs from the nuisances")
            if np.any(f.values <= 0) or abs(f.integral() - 1.0) > 1e-12:
                raise ConfigurationError("density must be positive and integrate to one")

    @property
    def dim(self) -> int:
        return self.p.dim

    @property
    def rho(self) -> float:
        return self.noise.rho

    @property
    def alpha(self) -> float | None:
        return self.p.smoothness if isinstance(self.p, WaveletSeriesFunction) else None

    @property
    def beta(self) -> float | None:
        return self.b.smoothness if isinstance(self.b, WaveletSeriesFunction) else None

    @property
    def is_worst_case(self) -> bool:
        return isinstance(self.p, WaveletSeriesFunction) and isinstance(self.b, WaveletSeriesFunction)

    @property
    def is_constant(self) -> bool:
        return all(
            isinstance(fn, PiecewiseConstantFn) and np.all(fn.values == fn.values[0])
            for fn in (self.p, self.b)
        )

    @property
    def constants(self) -> tuple[float, float]:
        """``(p0, b0)`` for a constant-nuisance process."""
        if not self.is_constant:
            raise ConfigurationError("process does not have constant nuisances")
        return float(self.p.values[0]), float(self.b.values[0])

    def with_noise(self, noise: NoiseSpec) -> "DGP":
        return replace(self, noise=noise)


@dataclass(frozen=True)
class Dataset:
    """I.i.d. rows ``(x, a, y)`` with an optional fold assignment.

    ``density`` is the known design density carried along for estimators that
    weight by it (``None`` means uniform).
    """

    x: NDArray[np.float64]
    a: NDArray[np.float64]
    y: NDArray[np.float64]
    fold_ids: NDArray[np.int64] | None = None
    density: PiecewiseConstantFn | None = None

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        a = np.asarray(self.a, dtype=np.float64).reshape(-1)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if not (x.shape[0] == a.size == y.size):
            raise DomainError(f"row counts differ: x {x.shape[0]}, a {a.size}, y {y.size}")
        object.__setattr__(self, "x", as_points(x, x.shape[1]))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        if self.fold_ids is not None:
            ids = np.asarray(self.fold_ids, dtype=np.int64).reshape(-1)
            if ids.size != a.size:
                raise DomainError("fold_ids must have one entry per row")
            object.__setattr__(self, "fold_ids", ids)

    def __len__(self) -> int:
        return self.a.size

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def subset(self, rows: NDArray[np.int64] | slice) -> "Dataset":
        return Dataset(self.x[rows], self.a[rows], self.y[rows], None, self.density)

    def assign_folds(self, m: int, rng: np.random.Generator | None = None) -> "Dataset":
        """Truncate to ``m * floor(n / m)`` rows and label ``m`` equal folds.

        Without ``rng`` fold ``l`` is the ``l``-th contiguous block; with ``rng``
        the labels are a random balanced permutation.
        """
        if m < 1:
            raise DomainError(f"fold count must be >= 1, got {m}")
        size = len(self) // m
        if size == 0:
            raise DomainError(f"{len(self)} rows cannot fill {m} nonempty folds")
        ids = np.repeat(np.arange(m), size)
        if rng is not None:
            ids = rng.permutation(ids)
        keep = slice(0, m * size)
        return Dataset(self.x[keep], self.a[keep], self.y[keep], ids, self.density)

    def folds(self, m: int) -> list["Dataset"]:
        """The ``m`` equal folds, using ``fold_ids`` when they match ``m``."""
        if self.fold_ids is None or int(self.fold_ids.max(initial=-1)) + 1 != m:
            return self.assign_folds(m).folds(m)
        out = []
        for ell in range(m):
            out.append(self.subset(np.flatnonzero(self.fold_ids == ell)))
        sizes = {len(f) for f in out}
        if len(sizes) != 1 or 0 in sizes:
            raise DomainError(f"folds must be nonempty and equal in size, got sizes {sorted(sizes)}")
        return out


def make_rng(seed: int | np.random.Generator | np.random.SeedSequence) -> np.random.Generator:
    """Generator from an integer seed, a seed sequence, or pass-through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _sample_design(dgp: DGP, n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    if dgp.density is None:
        return rng.random((n, dgp.dim))
    f = dgp.density
    res = f.resolution
    prob = f.values / res.size
    cells = rng.choice(res.size, size=n, p=prob / prob.sum())
    coords = np.stack(np.unravel_index(cells, (res.cells_per_axis,) * res.dim), axis=1)
    return (coords + rng.random((n, res.dim))) / res.cells_per_axis


def sample(dgp: DGP, total_n: int, seed: int | np.random.Generator | np.random.SeedSequence) -> Dataset:
    """Draw ``total_n`` i.i.d. rows.

    Draw order is fixed (design, shared sign, idiosyncratic noise) so equal
    seeds give bit-identical datasets.
    """
    if int(total_n) != total_n or total_n < 1:
        raise DomainError(f"total_n must be a positive integer, got {total_n}")
    rng = make_rng(seed)
    n = int(total_n)
    x = _sample_design(dgp, n, rng)
    w = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    a = dgp.p(x) + dgp.noise.shared_a * w
    y = dgp.b(x) + dgp.noise.shared_b * w
    if dgp.noise.idio > 0:
        v = rng.uniform(-1.0, 1.0, size=(2, n))
        a += dgp.noise.idio * v[0]
        y += dgp.noise.idio * v[1]
    return Dataset(x, a, y, None, dgp.density)


def true_psi(dgp: DGP) -> float:
    """``E[Cov(A, Y | X)]``, which equals ``rho`` for the shared-sign noise."""
    return float(dgp.rho)


def worst_case_dgp(
    alpha: float,
    beta: float,
    d: int = 1,
    epsilon: float = 0.1,
    L: int = 12,
    *,
    offset: float = 0.5,
    rho: float = 0.02,
    idio: float = 0.1,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
    density: PiecewiseConstantFn | None = None,
) -> DGP:
    """Process whose nuisances sit on the edge of the Hölder balls.

    Both ``p`` and ``b`` carry every detail coefficient at level ``l`` with
    the same sign and magnitude ``epsilon * 2**(-l(s + d/2))``, so their
    projection residuals are positively aligned at every level.
    """
    p = WaveletSeriesFunction(alpha, epsilon, L, d, offset)
    b = WaveletSeriesFunction(beta, epsilon, L, d, offset)
    return DGP(p, b, NoiseSpec.from_rho(rho, idio), bounds, density)


def constant_dgp(
    p0: float,
    b0: float,
    rho: float,
    d: int = 1,
    *,
    idio: float = 0.1,
    bounds: tuple[float, float] = DEFAULT_BOUNDS,
) -> DGP:
    """Constant nuisances ``p = p0``, ``b = b0``; then ``E[AY|X] = p0 b0 + rho``."""
    res = DyadicResolution(0, d)
    return DGP(
        PiecewiseConstantFn(res, [p0]),
        PiecewiseConstantFn(res, [b0]),
        NoiseSpec.from_rho(rho, idio),
        bounds,
    )
