"""
Monte-Carlo rate experiments.

An experiment draws ``R`` datasets at every grid size ``n``, runs one
estimator on each, and summarises bias, variance and MSE. Log-log slopes of
those summaries are compared with the decay rates from :mod:`drwave.tuning`.

Grid sizes are per-fold sample sizes: a scheme with ``m`` folds draws
``m * n`` rows, and resolutions are tuned to ``n``.

Every replication owns a random stream seeded by ``(seed, n, replication)``,
so results do not depend on the thread count or on which other sizes are in
the grid.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from .errors import ConfigurationError, DomainError
from .estimators import EstimatorConfig, estimate, fold_layout
from .nuisance import DEFAULT_DENSITY_BOUNDS, fit_regression, prediction_optimal_k
from .synthetic_models import DEFAULT_BOUNDS, DGP, constant_dgp, sample, true_psi, worst_case_dgp
from .tuning import (
    RegimeReport,
    minimax_exponents,
    minimax_resolution,
    mse_decay,
    prediction_exponents,
    rate_terms,
)
from .wavelet_basis import DyadicResolution, project

__all__ = [
    "DGPSpec",
    "EstimatorSpec",
    "TuningRule",
    "ExperimentSpec",
    "RatePoint",
    "SlopeFit",
    "SlopeVerdict",
    "RateResult",
    "CSV_COLUMNS",
    "DEFAULT_N_GRID",
    "replication_seed",
    "run_experiment",
    "fit_loglog_slope",
    "compare_to_theory",
    "NuisancePoint",
    "nuisance_ise_experiment",
    "nuisance_variance_experiment",
]

CSV_COLUMNS = ("n", "mean", "bias", "var", "mse", "stderr")
DEFAULT_N_GRID = tuple(2**j for j in range(9, 16))
DEFAULT_REPLICATIONS = 2000
DEFAULT_SLOPE_TOLERANCE = 0.15
# |bias| below this many standard errors is indistinguishable from zero.
BIAS_FLOOR_SE = 3.0
MIN_REPLICATIONS = 100


# =============================================================================
# Specifications
# =============================================================================


@dataclass(frozen=True)
class DGPSpec:
    """Serializable description of a synthetic process.

    ``family="worst_case"`` uses ``alpha, beta, epsilon, levels, offset``;
    ``family="constant"`` uses ``p0, b0``. Both use ``rho`` and ``idio``.
    """

    family: str = "worst_case"
    alpha: float | None = 0.15
    beta: float | None = 0.15
    d: int = 1
    epsilon: float = 0.15
    levels: int = 40
    offset: float = 0.0
    p0: float | None = None
    b0: float | None = None
    rho: float = 0.02
    idio: float = 0.05
    bounds: tuple[float, float] = DEFAULT_BOUNDS

    def __post_init__(self) -> None:
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        if self.family == "worst_case":
            if self.alpha is None or self.beta is None:
                raise ConfigurationError("the worst_case family needs alpha and beta")
        elif self.family == "constant":
            if self.p0 is None or self.b0 is None:
                raise ConfigurationError("the constant family needs p0 and b0")
        else:
            raise ConfigurationError(f"unknown DGP family {self.family!r}")

    def build(self) -> DGP:
        if self.family == "worst_case":
            return worst_case_dgp(
                self.alpha, self.beta, self.d, self.epsilon, self.levels,
                offset=self.offset, rho=self.rho, idio=self.idio, bounds=self.bounds,
            )
        return constant_dgp(self.p0, self.b0, self.rho, self.d, idio=self.idio, bounds=self.bounds)


@dataclass(frozen=True)
class EstimatorSpec:
    """Estimator choice without resolutions; those come from the tuning rule."""

    kind: str = "IF"
    scheme: str = "double"
    cross_fit: bool = False
    density_mode: str = "uniform"
    swap_roles: bool = False
    density_gamma: float | None = None
    density_c: float = 1.0
    density_bounds: tuple[float, float] = DEFAULT_DENSITY_BOUNDS

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", str(self.kind).upper())
        object.__setattr__(self, "scheme", str(self.scheme).lower())
        object.__setattr__(self, "density_bounds", tuple(float(b) for b in self.density_bounds))
        # Validation is shared with the concrete config.
        self.config(DyadicResolution(0), DyadicResolution(0))

    def config(self, k1: DyadicResolution, k2: DyadicResolution) -> EstimatorConfig:
        return EstimatorConfig(
            self.kind, self.scheme, k1, k2, self.cross_fit, self.density_mode,
            self.swap_roles, self.density_gamma, self.density_c, self.density_bounds,
        )

    @property
    def folds(self) -> int:
        return fold_layout(self.kind, self.scheme, self.density_mode).m


TUNING_RULES = ("fixed", "prediction", "minimax")


@dataclass(frozen=True)
class TuningRule:
    """How ``(k1, k2)`` follow the per-fold size ``n``.

    ``fixed`` uses the sizes ``k1, k2``; ``prediction`` uses
    ``c1 n**(d/(2alpha+d))`` and ``c2 n**(d/(2beta+d))``; ``minimax`` uses
    :func:`drwave.tuning.minimax_resolution`. ``alpha`` and ``beta`` default
    to the DGP smoothness.
    """

    rule: str = "minimax"
    k1: int | None = None
    k2: int | None = None
    c1: float = 1.0
    c2: float = 1.0
    kmax_side: str = "k1"
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self) -> None:
        if self.rule not in TUNING_RULES:
            raise ConfigurationError(f"tuning rule must be one of {TUNING_RULES}, got {self.rule!r}")
        if self.rule == "fixed" and (self.k1 is None or self.k2 is None):
            raise ConfigurationError("the fixed rule needs k1 and k2")
        if self.kmax_side not in ("k1", "k2"):
            raise ConfigurationError(f"kmax_side must be 'k1' or 'k2', got {self.kmax_side!r}")

    def smoothness(self, dgp: DGPSpec) -> tuple[float, float]:
        alpha = self.alpha if self.alpha is not None else dgp.alpha
        beta = self.beta if self.beta is not None else dgp.beta
        if alpha is None or beta is None:
            raise ConfigurationError(f"the {self.rule} rule needs alpha and beta")
        return alpha, beta

    def resolutions(self, n: int, dgp: DGPSpec, est: EstimatorSpec) -> tuple[DyadicResolution, DyadicResolution]:
        d = dgp.d
        if self.rule == "fixed":
            return DyadicResolution.from_size(self.k1, d), DyadicResolution.from_size(self.k2, d)
        alpha, beta = self.smoothness(dgp)
        if self.rule == "prediction":
            return prediction_optimal_k(alpha, n, d, self.c1), prediction_optimal_k(beta, n, d, self.c2)
        return minimax_resolution(est.kind, est.scheme, alpha, beta, d, n, self.kmax_side)

    def exponents(self, dgp: DGPSpec, est: EstimatorSpec) -> tuple[float, float]:
        """Ideal exponents ``(a1, a2)`` of the rule; zero for fixed sizes."""
        if self.rule == "fixed":
            return 0.0, 0.0
        alpha, beta = self.smoothness(dgp)
        if self.rule == "prediction":
            return prediction_exponents(alpha, beta, dgp.d)
        return minimax_exponents(est.kind, est.scheme, alpha, beta, dgp.d, self.kmax_side)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one rate experiment."""

    dgp: DGPSpec = field(default_factory=DGPSpec)
    estimator: EstimatorSpec = field(default_factory=EstimatorSpec)
    tuning: TuningRule = field(default_factory=TuningRule)
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    replications: int = DEFAULT_REPLICATIONS
    seed: int = 0
    slope_tolerance: float = DEFAULT_SLOPE_TOLERANCE
    name: str = "experiment"

    def __post_init__(self) -> None:
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError(f"n_grid must be strictly increasing with >= 2 points, got {grid}")
        if grid[0] < 1:
            raise ConfigurationError("n_grid entries must be positive")
        if self.replications < MIN_REPLICATIONS:
            raise ConfigurationError(f"replications must be >= {MIN_REPLICATIONS}, got {self.replications}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")
        if self.slope_tolerance <= 0:
            raise ConfigurationError("slope_tolerance must be positive")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["n_grid"] = list(self.n_grid)
        out["dgp"]["bounds"] = list(self.dgp.bounds)
        out["estimator"]["density_bounds"] = list(self.estimator.density_bounds)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        return cls(
            dgp=DGPSpec(**raw.get("dgp", {})),
            estimator=EstimatorSpec(**raw.get("estimator", {})),
            tuning=TuningRule(**raw.get("tuning", {})),
            **{k: raw[k] for k in ("n_grid", "replications", "seed", "slope_tolerance", "name") if k in raw},
        )


# =============================================================================
# Results
# =============================================================================


@dataclass(frozen=True)
class RatePoint:
    """Summary of the ``R`` estimates at one grid size."""

    n: int
    k1: int
    k2: int
    replications: int
    mean: float
    bias: float
    var: float
    mse: float
    stderr: float

    @property
    def bias_resolved(self) -> bool:
        return abs(self.bias) >= BIAS_FLOOR_SE * self.stderr


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_points: int
    excluded: tuple[int, ...] = ()


@dataclass(frozen=True)
class SlopeVerdict:
    """One fitted slope against its theoretical value."""

    quantity: str
    fitted: float
    stderr: float
    theory: float
    tolerance: float
    two_sided: bool
    passed: bool

    @property
    def gap(self) -> float:
        return self.fitted - self.theory


@dataclass
class RateResult:
    spec: ExperimentSpec
    psi: float
    points: list[RatePoint]
    slopes: dict[str, SlopeFit | None] = field(default_factory=dict)
    verdicts: list[SlopeVerdict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(v.passed for v in self.verdicts)

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for p in self.points:
            writer.writerow([p.n] + [repr(float(getattr(p, c))) for c in CSV_COLUMNS[1:]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "psi": self.psi,
            "points": [asdict(p) for p in self.points],
            "slopes": {k: (asdict(v) if v is not None else None) for k, v in self.slopes.items()},
            "verdicts": [dict(asdict(v), gap=v.gap) for v in self.verdicts],
            "passed": self.passed,
        }

    def json_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


# =============================================================================
# Running
# =============================================================================


def replication_seed(seed: int, n: int, rep: int) -> np.random.SeedSequence:
    """Random stream of replication ``rep`` at grid size ``n``."""
    return np.random.SeedSequence(seed, spawn_key=(int(n), int(rep)))


def _replicate(dgp: DGP, config: EstimatorConfig, rows: int, seed: int, n: int, reps: range) -> NDArray:
    out = np.empty(len(reps))
    for i, r in enumerate(reps):
        out[i] = estimate(config, sample(dgp, rows, replication_seed(seed, n, r)))
    return out


def _chunks(total: int, parts: int) -> list[range]:
    bounds = np.linspace(0, total, parts + 1).round().astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _summarise(n: int, k1: int, k2: int, est: NDArray, psi: float) -> RatePoint:
    r = est.size
    mean = float(np.mean(est))
    var = float(np.var(est, ddof=1))
    mse = float(np.mean((est - psi) ** 2))
    return RatePoint(n, k1, k2, r, mean, mean - psi, var, mse, math.sqrt(var / r))


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> RateResult:
    """Run every grid size and fit the slopes.

    Replications are split into contiguous chunks across ``threads`` workers;
    each estimate lands at its replication index, so the summaries are
    bit-identical for any thread count.

    Raises
    ------
    DomainError
        If any estimate is not finite.
    """
    if threads < 1:
        raise ConfigurationError("threads must be >= 1")
    dgp = spec.dgp.build()
    psi = true_psi(dgp)
    m = spec.estimator.folds
    points = []
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for n in spec.n_grid:
            k1, k2 = spec.tuning.resolutions(n, spec.dgp, spec.estimator)
            config = spec.estimator.config(k1, k2)
            parts = _chunks(spec.replications, threads)
            futures = [pool.submit(_replicate, dgp, config, m * n, spec.seed, n, c) for c in parts]
            est = np.concatenate([f.result() for f in futures])
            bad = np.flatnonzero(~np.isfinite(est))
            if bad.size:
                raise DomainError(
                    f"non-finite estimate at n={n}, replication {int(bad[0])} "
                    f"(k1={k1.size}, k2={k2.size}, {config.kind}/{config.scheme})"
                )
            points.append(_summarise(n, k1.size, k2.size, est, psi))
    result = RateResult(spec, psi, points)
    result.slopes = _fit_slopes(points)
    return result


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> SlopeFit:
    """Least-squares slope of ``log(value)`` on ``log(n)``.

    Raises
    ------
    DomainError
        With fewer than two points, repeated ``n``, or a nonpositive value.
    """
    pts = list(points)
    if len(pts) < 2:
        raise DomainError("slope fitting needs at least two points")
    n = np.array([p[0] for p in pts], dtype=float)
    v = np.array([p[1] for p in pts], dtype=float)
    if np.any(n <= 0) or np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise DomainError("slope fitting needs positive n and positive finite values")
    if np.unique(n).size < 2:
        raise DomainError("slope fitting needs at least two distinct n")
    x, y = np.log(n), np.log(v)
    if len(pts) == 2:
        slope = float((y[1] - y[0]) / (x[1] - x[0]))
        return SlopeFit(slope, 0.0, float(y[0] - slope * x[0]), 2)
    fit = stats.linregress(x, y)
    return SlopeFit(float(fit.slope), float(fit.stderr), float(fit.intercept), len(pts))


def _fit_slopes(points: list[RatePoint]) -> dict[str, SlopeFit | None]:
    slopes: dict[str, SlopeFit | None] = {
        "mse": fit_loglog_slope([(p.n, p.mse) for p in points]),
        "var": fit_loglog_slope([(p.n, p.var) for p in points]),
    }
    kept = [p for p in points if p.bias_resolved]
    excluded = tuple(p.n for p in points if not p.bias_resolved)
    if len(kept) >= 2:
        fit = fit_loglog_slope([(p.n, abs(p.bias)) for p in kept])
        slopes["bias"] = replace(fit, excluded=excluded)
    else:
        slopes["bias"] = None
    return slopes


def _bias_decay(kind: str, scheme: str, alpha: float, beta: float, d: int, a1: float, a2: float) -> float:
    if kind == "NR":
        a1 = a2
    lo, hi = min(a1, a2), max(a1, a2)
    bias, _ = rate_terms(kind, scheme, alpha, beta, d)
    return float(min(-(c0 * lo + c1 * hi + c2) for c0, c1, c2 in bias))


def compare_to_theory(result: RateResult, report: RegimeReport) -> list[SlopeVerdict]:
    """Check fitted MSE and bias slopes against the rate terms.

    Theoretical slopes use the rule's ideal exponents at the smoothness in
    ``report``. On the worst-case family the rates are attained, so the check
    is two-sided; on other processes the theory is only an upper bound and a
    faster decay also passes.

    Raises
    ------
    DomainError
        If the result holds no points.
    """
    if not result.points:
        raise DomainError("empty result")
    spec = result.spec
    if spec.dgp.d != report.d:
        raise DomainError(f"dimension mismatch: result d={spec.dgp.d}, report d={report.d}")
    kind, scheme = spec.estimator.kind, spec.estimator.scheme
    a1, a2 = spec.tuning.exponents(spec.dgp, spec.estimator)
    args = (kind, scheme, report.alpha, report.beta, report.d, a1, a2)
    theory = {"mse": -mse_decay(*args), "bias": -_bias_decay(*args)}
    two_sided = spec.dgp.family == "worst_case"
    tol = spec.slope_tolerance
    slopes = result.slopes or _fit_slopes(result.points)
    verdicts = []
    for q in ("mse", "bias"):
        fit = slopes.get(q)
        if fit is None:
            continue
        gap = fit.slope - theory[q]
        ok = abs(gap) <= tol if two_sided else gap <= tol
        verdicts.append(SlopeVerdict(q, fit.slope, fit.stderr, theory[q], tol, two_sided, bool(ok)))
    result.verdicts = verdicts
    return verdicts


# =============================================================================
# Nuisance-estimator experiments
# =============================================================================


@dataclass(frozen=True)
class NuisancePoint:
    n: int
    k: int
    value: float
    stderr: float


def _fit_p(dgp: DGP, n: int, res: DyadicResolution, seed: int, rep: int) -> NDArray:
    data = sample(dgp, n, replication_seed(seed, n, rep))
    return fit_regression(data, "A", res).values


def nuisance_ise_experiment(
    dgp: DGP, n_grid: Sequence[int], replications: int = 200, seed: int = 0, c: float = 1.0
) -> list[NuisancePoint]:
    """Mean integrated squared error of ``p_hat`` at the prediction-optimal resolution.

    The error splits exactly into a cell part and the projection residual of
    ``p``, so no quadrature is needed.
    """
    alpha = dgp.alpha
    if alpha is None:
        raise ConfigurationError("the ISE experiment needs a worst-case process")
    out = []
    for n in n_grid:
        res = prediction_optimal_k(alpha, n, dgp.dim, c)
        target = project(dgp.p, res)
        resid = dgp.p.residual_sq_norm(res.level)
        ise = np.array([
            float(np.mean((_fit_p(dgp, n, res, seed, r) - target.values) ** 2)) + resid
            for r in range(replications)
        ])
        out.append(NuisancePoint(n, res.size, float(ise.mean()), float(ise.std(ddof=1) / math.sqrt(replications))))
    return out


def nuisance_variance_experiment(
    dgp: DGP, n: int, k_grid: Sequence[int], replications: int = 200, seed: int = 0
) -> list[NuisancePoint]:
    """Integrated variance ``int Var(p_hat(x)) dx`` at fixed ``n`` for each ``k``.

    The reported stderr is a delta-method approximation treating cells as
    independent.
    """
    out = []
    for k in k_grid:
        res = DyadicResolution.from_size(k, dgp.dim)
        fits = np.stack([_fit_p(dgp, n, res, seed, r) for r in range(replications)])
        cell_var = fits.var(axis=0, ddof=1)
        value = float(cell_var.mean())
        se = value * math.sqrt(2.0 / (replications - 1) / res.size)
        out.append(NuisancePoint(n, res.size, value, se))
    return out
