"""
Exact ground truth for the estimators under Haar projections.

Each value is produced by two independent routes that must agree:

* projection bias: a Parseval sum over detail coefficients, and exact
  quadrature of the projected residual product on the finest dyadic grid;
* finite-``n`` biases on constant-nuisance processes: closed forms in
  ``(k1, k2, n, c, s)`` and the same expansion assembled from kernel moments
  counted cell by cell;
* kernel moments: closed forms, and enumeration of all cell configurations on
  the ``k1 v k2`` grid (every Haar kernel is constant on those cells).

Notation: for a constant process ``p = p0`` and ``b = b0`` write
``s = p0 b0`` and ``c = E[AY | X] = s + rho``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError
from .synthetic_models import DGP, worst_case_dgp, constant_dgp
from .wavelet_basis import DyadicResolution, WaveletSeriesFunction, project

__all__ = [
    "exact_projection_bias",
    "projection_bias_quadrature",
    "exact_constant_bias",
    "exact_nonlinearity_bias",
    "exact_own_observation_bias",
    "constant_bias_from_moments",
    "KERNEL_MOMENTS",
    "KernelMomentRow",
    "KernelMomentReport",
    "kernel_moment_check",
    "cell_moment",
    "OracleCheck",
    "oracle_check",
    "load_sign_fixtures",
]

# Largest finest grid used by the quadrature route.
MAX_QUADRATURE_CELLS = 1 << 22


def _size(k: int | DyadicResolution) -> int:
    if isinstance(k, DyadicResolution):
        return k.size
    k = int(k)
    if k < 1 or k & (k - 1):
        raise ConfigurationError(f"resolution size must be a power of two, got {k}")
    return k


def _level(k: int | DyadicResolution, dim: int) -> int:
    if isinstance(k, DyadicResolution):
        return k.level
    size = _size(k)
    level, rem = divmod(size.bit_length() - 1, dim)
    if rem:
        raise ConfigurationError(f"k={size} is not 2**(j*{dim})")
    return level


def _check_mode(mode: str) -> str:
    mode = mode.upper()
    if mode not in ("INT", "MC", "IF", "NR"):
        raise ConfigurationError(f"mode must be INT, MC, IF or NR, got {mode!r}")
    return mode


# =============================================================================
# Projection bias (double split, worst-case series)
# =============================================================================


def _series_pair(dgp: DGP) -> tuple[WaveletSeriesFunction, WaveletSeriesFunction]:
    if not dgp.is_worst_case:
        raise ConfigurationError("projection-bias oracle needs series nuisances (worst_case_dgp)")
    return dgp.p, dgp.b  # type: ignore[return-value]


def _start_level(mode: str, k1: int | DyadicResolution, k2: int | DyadicResolution, dim: int) -> int:
    j1, j2 = _level(k1, dim), _level(k2, dim)
    if mode in ("INT", "MC"):
        return min(j1, j2)
    if mode == "IF":
        return max(j1, j2)
    return j2


def exact_projection_bias(
    dgp: DGP,
    k1: int | DyadicResolution,
    k2: int | DyadicResolution,
    mode: str = "INT",
    check: bool = True,
) -> float:
    """Expected error of a double-split estimator on a series process.

    Parseval sum over matching detail coefficients of ``p`` and ``b`` from the
    start level ``j*`` up: ``j* = level(k1 ^ k2)`` for INT and MC,
    ``level(k1 v k2)`` for IF, ``level(k2)`` for single-split NR. The value
    is exact for every ``n`` because the folds are independent.

    With ``check=True`` and a finest grid of at most ``2**22`` cells the sum is
    compared with :func:`projection_bias_quadrature` to ``1e-12`` relative.
    """
    mode = _check_mode(mode)
    p, b = _series_pair(dgp)
    d = dgp.dim
    start = max(_start_level(mode, k1, k2, d), p.base_level, b.base_level)
    top = min(p.max_level, b.max_level)
    n_details = (1 << d) - 1
    total = 0.0
    for level in range(start, top + 1):
        total += n_details * 2.0 ** (level * d) * p.coefficient(level) * b.coefficient(level)
    if check and (1 << ((max(p.max_level, b.max_level) + 1) * d)) <= MAX_QUADRATURE_CELLS:
        other = projection_bias_quadrature(dgp, k1, k2, mode)
        if not math.isclose(total, other, rel_tol=1e-12, abs_tol=1e-15):
            raise AssertionError(f"oracle routes disagree: {total!r} vs {other!r}")
    return total


def projection_bias_quadrature(
    dgp: DGP, k1: int | DyadicResolution, k2: int | DyadicResolution, mode: str = "INT"
) -> float:
    """The same bias from the estimator's defining expectation, on the finest grid.

    INT and MC: ``int p b - int Pi_k1 p Pi_k2 b``; IF: ``int (p - Pi_k1 p)(b - Pi_k2 b)``;
    NR: ``int p (b - Pi_k2 b)``. Series truncated at ``L`` are piecewise constant
    at level ``L + 1``, so every integral is an exact cell sum.
    """
    mode = _check_mode(mode)
    p, b = _series_pair(dgp)
    d = dgp.dim
    fine = DyadicResolution(max(p.max_level, b.max_level) + 1, d)
    r1 = DyadicResolution(_level(k1, d), d)
    r2 = DyadicResolution(_level(k2, d), d)
    pf, bf = project(p, fine).values, project(b, fine).values
    p1 = project(p, r1).at_level(fine.level).values
    b2 = project(b, r2).at_level(fine.level).values
    if mode in ("INT", "MC"):
        prod = pf * bf - p1 * b2
    elif mode == "IF":
        prod = (pf - p1) * (bf - b2)
    else:
        prod = pf * (bf - b2)
    return float(prod.sum() / fine.size)


# =============================================================================
# Finite-n biases on constant processes
# =============================================================================


def _constant_moments(dgp: DGP) -> tuple[float, float]:
    if not dgp.is_constant:
        raise ConfigurationError("this oracle needs a constant-nuisance process (constant_dgp)")
    if dgp.density is not None:
        raise ConfigurationError("this oracle assumes a uniform design")
    p0, b0 = dgp.constants
    s = p0 * b0
    return s, s + dgp.rho


def _bias_formula(
    kind: str, scheme: str, k1: int, k2: int, n: int, s: float, c: float,
    same: Callable[[int], float], cross: float,
) -> float:
    """Shared expansion; ``same(k)`` is ``int K_k(x,x) dx`` and ``cross`` is ``int E[K1 K2]``."""
    if scheme == "double":
        return 0.0
    if kind == "NR":
        return 0.0 if scheme == "single" else (s - c * same(k2)) / n
    # E[p_hat b_hat] at a point integrated, one fold shared by both fits.
    shared = (c * cross + (n - 1) * s) / n
    if scheme == "single" or kind == "INT":
        return s - shared if kind in ("INT", "MC") else shared - s
    # No split: evaluation points are the fitting points.
    t = (
        c * same(k1) * same(k2)
        + (n - 1) * (same(k1) + same(k2)) * s
        + (n - 1) * c * cross
        + (n - 1) * (n - 2) * s
    ) / n**2
    if kind == "MC":
        return s - t
    return s - (c * (same(k1) + same(k2)) + 2 * (n - 1) * s) / n + t


def exact_constant_bias(
    dgp: DGP,
    kind: str,
    scheme: str,
    k1: int | DyadicResolution,
    k2: int | DyadicResolution,
    n: int,
) -> float:
    """Exact ``E[psi_hat] - psi`` for a constant process, any kind and scheme.

    Closed forms with ``kmin = k1 ^ k2``:

    * double split, and single-split NR: ``0``;
    * single split INT and MC (also no-split INT): ``-(c kmin - s) / n``;
    * single split IF: ``+(c kmin - s) / n``;
    * no-split NR: ``-(c k2 - s) / n``;
    * no-split MC and IF: the full own-observation expansion, see the source.
    """
    kind, scheme = kind.upper(), scheme.lower()
    s, c = _constant_moments(dgp)
    a, b = _size(k1), _size(k2)
    return _bias_formula(kind, scheme, a, b, int(n), s, c, lambda k: float(k), float(min(a, b)))


def constant_bias_from_moments(
    dgp: DGP,
    kind: str,
    scheme: str,
    k1: int | DyadicResolution,
    k2: int | DyadicResolution,
    n: int,
) -> float:
    """Second route: the same expansion with kernel moments counted on cells."""
    kind, scheme = kind.upper(), scheme.lower()
    s, c = _constant_moments(dgp)
    a, b = _size(k1), _size(k2)
    same = lambda k: cell_moment("trace", k, k)  # noqa: E731
    return _bias_formula(kind, scheme, a, b, int(n), s, c, same, cell_moment("single_cross", a, b))


def exact_nonlinearity_bias(
    dgp: DGP, k1: int | DyadicResolution, k2: int | DyadicResolution, n: int, kind: str = "IF"
) -> float:
    """Single-split bias on a constant process; leading term ``c (k1 ^ k2) / n``.

    The exact value is ``(c kmin - s) / n`` for IF and its negative for INT and MC.
    """
    return exact_constant_bias(dgp, kind, "single", k1, k2, n)


def exact_own_observation_bias(
    dgp: DGP,
    k: int | DyadicResolution,
    n: int,
    kind: str = "NR",
    k2: int | DyadicResolution | None = None,
) -> float:
    """No-split bias on a constant process.

    For NR, ``k`` is the single resolution and the value is ``-(c k - s) / n``.
    For IF and MC, ``k`` is ``k1`` and ``k2`` defaults to ``k``.
    """
    kk2 = k if k2 is None else k2
    if kind.upper() == "NR":
        return exact_constant_bias(dgp, "NR", "none", k, k, n)
    return exact_constant_bias(dgp, kind, "none", k, kk2, n)


# =============================================================================
# Kernel moments
# =============================================================================
#
# Every Haar kernel with k <= K is constant on the K cells of the finest grid,
# so an integral over uniform points equals an average over cell labels.
# A kernel is k * [u // (K/k) == v // (K/k)], which also covers d > 1 once
# cells are ordered so that each coarse cell is a contiguous block.


def _kern(k: int, big: int, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    r = big // k
    return np.where((u // r) == (v // r), float(k), 0.0)


def _grid(big: int, nvars: int) -> list[np.ndarray]:
    axes = np.meshgrid(*([np.arange(big)] * nvars), indexing="ij")
    return [a.ravel() for a in axes]


def _mean_over(big: int, nvars: int, f: Callable[..., np.ndarray]) -> float:
    return float(np.mean(f(*_grid(big, nvars))))


def _outer_mean(big: int, inner: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
                combine: Callable[..., np.ndarray], n_inner: int = 1) -> float:
    """``mean_{x,y} combine(E_X[inner_i(X, x, y)] ...)`` with the X-mean taken first."""
    xx, yy, zz = np.meshgrid(np.arange(big), np.arange(big), np.arange(big), indexing="ij")
    parts = [inner(i, zz, xx, yy).mean(axis=2) for i in range(n_inner)]
    return float(np.mean(combine(*parts)))


def _moment_table(k1: int, k2: int) -> dict[str, tuple[Callable[[], float], float, float]]:
    """name -> (cell-enumeration value, closed form, claimed order)."""
    big = max(k1, k2)
    kmin, kmax = min(k1, k2), max(k1, k2)
    K = lambda k, u, v: _kern(k, big, u, v)  # noqa: E731
    return {
        # Lemma on pairs of kernels evaluated at two points.
        "pair_abs": (
            lambda: _mean_over(big, 3, lambda X, x, y: K(k1, X, x) * K(k2, X, y)), 1.0, 1.0),
        "pair_prod_of_means": (
            lambda: _outer_mean(
                big,
                lambda i, X, x, y: K((k1, k2)[i], X, x) * K((k1, k2)[i], X, y),
                lambda a, b: a * b, 2),
            float(kmin), float(kmin)),
        "pair_mean_squared": (
            lambda: _outer_mean(big, lambda i, X, x, y: K(k1, X, x) * K(k2, X, y), lambda a: a**2),
            float(kmin), float(kmin)),
        "pair_cubed_k1": (
            lambda: _mean_over(big, 3, lambda X, x, y: K(k1, X, x) * K(k2, X, x) * K(k1, X, y)),
            float(kmin), float(kmin)),
        "pair_cubed_k2": (
            lambda: _mean_over(big, 3, lambda X, x, y: K(k1, X, x) * K(k2, X, x) * K(k2, X, y)),
            float(kmin), float(kmin)),
        "pair_fourth": (
            lambda: _mean_over(
                big, 3, lambda X, x, y: K(k1, X, x) * K(k2, X, x) * K(k1, X, y) * K(k2, X, y)),
            float(kmin) ** 2, float(kmin) ** 2),
        # Lemma on kernels sharing one evaluation point.
        "single_sup_abs": (
            lambda: float(np.max(np.mean(
                _kern(k1, big, *np.meshgrid(np.arange(big), np.arange(big), indexing="ij")),
                axis=0))),
            1.0, 1.0),
        "single_cross": (
            lambda: _mean_over(big, 2, lambda X, x: K(k1, X, x) * K(k2, X, x)),
            float(kmin), float(kmin)),
        "single_third": (
            lambda: _mean_over(big, 2, lambda X, x: K(k1, X, x) * K(k2, X, x) ** 2),
            k1 * k2**2 / kmax, float(k1 * k2)),
        "single_fourth": (
            lambda: _mean_over(big, 2, lambda X, x: K(k1, X, x) ** 2 * K(k2, X, x) ** 2),
            float(kmin**2 * kmax), float(kmin**2 * kmax)),
        "single_pt3": (
            lambda: float(np.mean(
                np.mean(K(k1, *_grid(big, 2)).reshape(big, big) ** 2, axis=0)
                * np.mean(K(k2, *_grid(big, 2)).reshape(big, big) ** 2, axis=0))),
            float(k1 * k2), float(k1 * k2)),
        "single_cross_squared": (
            lambda: float(np.mean(np.mean(
                (K(k1, *_grid(big, 2)) * K(k2, *_grid(big, 2))).reshape(big, big), axis=0) ** 2)),
            float(kmin) ** 2, float(kmin) ** 2),
        # Diagonal of one kernel.
        "trace": (
            lambda: float(np.mean(_kern(k1, big, np.arange(big), np.arange(big)))),
            float(k1), float(k1)),
        "diag_sup": (
            lambda: float(np.max(_kern(k1, big, np.arange(big), np.arange(big)))),
            float(k1), float(k1)),
        # Three distinct sample points.
        "triple_zero": (
            lambda: _mean_over(big, 3, lambda a, b, c: K(k1, a, b) * K(k1, b, c) * K(k2, a, c)),
            float(kmin), float(kmin)),
        "triple_first": (
            lambda: _mean_over(
                big, 3, lambda a, b, c: K(k1, a, b) * K(k1, b, c) * K(k2, b, c) * K(k2, a, c)),
            float(kmin) ** 2, float(kmin) ** 2),
        "triple_second": (
            lambda: _mean_over(big, 3, lambda a, b, c: K(k1, a, b) ** 2 * K(k2, a, c) * K(k2, b, c)),
            float(k1 * kmin), float(k1 * kmin)),
    }


KERNEL_MOMENTS = tuple(_moment_table(1, 1).keys())


def cell_moment(name: str, k1: int, k2: int) -> float:
    """One kernel moment by exhaustive cell enumeration (no sampling)."""
    table = _moment_table(_size(k1), _size(k2))
    if name not in table:
        raise KeyError(f"unknown moment {name!r}; choose from {KERNEL_MOMENTS}")
    return table[name][0]()


@dataclass(frozen=True)
class KernelMomentRow:
    name: str
    k1: int
    k2: int
    cells: float
    closed_form: float
    order: float
    exact_match: bool
    mc_estimate: float | None = None
    mc_stderr: float | None = None


@dataclass(frozen=True)
class KernelMomentReport:
    """Per-moment values plus the order test across dyadic rescalings."""

    rows: tuple[KernelMomentRow, ...]
    order_ratio_spread: dict[str, float]
    tolerance_factor: float = 2.0

    @property
    def exact_ok(self) -> bool:
        return all(r.exact_match for r in self.rows)

    @property
    def order_ok(self) -> bool:
        return all(v <= self.tolerance_factor for v in self.order_ratio_spread.values())

    @property
    def passed(self) -> bool:
        return self.exact_ok and self.order_ok

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "exact_ok": self.exact_ok,
            "order_ok": self.order_ok,
            "order_ratio_spread": self.order_ratio_spread,
            "rows": [asdict(r) for r in self.rows],
        }


def _mc_moment(name: str, k1: int, k2: int, size: int, rng: np.random.Generator) -> tuple[float, float] | None:
    """Plain Monte-Carlo estimate of the single-expectation moments."""
    big = max(k1, k2)
    u = rng.integers(0, big, size=(3, size))
    K = lambda k, a, b: _kern(k, big, a, b)  # noqa: E731
    integrands = {
        "pair_abs": lambda X, x, y: K(k1, X, x) * K(k2, X, y),
        "pair_cubed_k1": lambda X, x, y: K(k1, X, x) * K(k2, X, x) * K(k1, X, y),
        "pair_cubed_k2": lambda X, x, y: K(k1, X, x) * K(k2, X, x) * K(k2, X, y),
        "single_cross": lambda X, x, y: K(k1, X, x) * K(k2, X, x),
        "triple_zero": lambda a, b, c: K(k1, a, b) * K(k1, b, c) * K(k2, a, c),
    }
    if name not in integrands:
        return None
    vals = integrands[name](*u)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(size))


def kernel_moment_check(
    k1: int = 4,
    k2: int = 16,
    sample_size: int | None = None,
    scalings: Sequence[int] = (1, 2, 4),
    seed: int = 0,
) -> KernelMomentReport:
    """Evaluate every kernel moment at ``(s k1, s k2)`` for each scaling ``s``.

    Checks cell enumeration against the closed form to ``1e-12`` relative and
    reports, per moment, the spread (max over min) of value/order across the
    scalings; the order claim holds when the spread is at most 2. With
    ``sample_size`` the single-expectation moments also get a Monte-Carlo
    estimate for reference.
    """
    rng = np.random.default_rng(seed)
    rows: list[KernelMomentRow] = []
    ratios: dict[str, list[float]] = {}
    for s in scalings:
        a, b = _size(k1) * s, _size(k2) * s
        for name, (cells_fn, closed, order) in _moment_table(a, b).items():
            cells = cells_fn()
            mc = _mc_moment(name, a, b, sample_size, rng) if sample_size else None
            rows.append(KernelMomentRow(
                name, a, b, cells, closed, order,
                math.isclose(cells, closed, rel_tol=1e-12),
                None if mc is None else mc[0], None if mc is None else mc[1],
            ))
            ratios.setdefault(name, []).append(cells / order)
    spread = {k: max(v) / min(v) for k, v in ratios.items()}
    return KernelMomentReport(tuple(rows), spread)


# =============================================================================
# Combined agreement suite and sign fixtures
# =============================================================================


@dataclass(frozen=True)
class OracleCheck:
    name: str
    primary: float
    secondary: float
    passed: bool


def oracle_check() -> list[OracleCheck]:
    """Two-route agreement over a fixed grid of oracle configurations."""
    out: list[OracleCheck] = []
    for alpha, beta, d, L in ((0.25, 0.25, 1, 12), (0.15, 0.4, 1, 10), (0.3, 0.6, 2, 6)):
        dgp = worst_case_dgp(alpha, beta, d, 0.1, L)
        for mode in ("INT", "MC", "IF", "NR"):
            for j1, j2 in ((1, 3), (3, 1), (2, 2), (L + 1, L + 2)):
                k1, k2 = DyadicResolution(j1, d), DyadicResolution(j2, d)
                a = exact_projection_bias(dgp, k1, k2, mode, check=False)
                b = projection_bias_quadrature(dgp, k1, k2, mode)
                out.append(OracleCheck(
                    f"projection {mode} a={alpha} b={beta} d={d} j=({j1},{j2})",
                    a, b, math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-15)))
    dgp = constant_dgp(0.5, 0.5, 0.05)
    for kind in ("INT", "MC", "NR", "IF"):
        for scheme in ("none", "single", "double"):
            for k1, k2, n in ((64, 64, 512), (2, 8, 16), (16, 4, 100)):
                a = exact_constant_bias(dgp, kind, scheme, k1, k2, n)
                b = constant_bias_from_moments(dgp, kind, scheme, k1, k2, n)
                out.append(OracleCheck(
                    f"constant {kind}/{scheme} k=({k1},{k2}) n={n}",
                    a, b, math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-15)))
    return out


def load_sign_fixtures() -> dict:
    """Monte-Carlo sign fixtures shipped with the package (with provenance)."""
    text = resources.files("drwave").joinpath("data/sign_fixtures.json").read_text()
    return json.loads(text)
