"""
Rate formulas, resolution rules and regime maps.

Resolutions are written as ``k1 = n**a1`` and ``k2 = n**a2``. For every
estimator kind and splitting scheme the worst-case bias and variance are sums
of monomials ``n**e(a1, a2)`` with ``e`` affine in ``(min(a1, a2), max(a1, a2))``;
the MSE decays like ``n**-r`` with ``r`` the smallest of the decay rates
(bias terms count twice).

Two encodings of the regime logic live here:

* :func:`regime_report` states the closed-form inequalities (encoding A);
* :func:`regime_from_rates` maximises the decay rate over the exponents by
  exact vertex enumeration of the 2-D max-min program (encoding B).

The two agree on every grid point except the no-split NR prediction-optimality
flag: the closed form states sufficiency when ``alpha >= min(beta, d/2)``,
while the rate terms only allow it on ``alpha == beta`` below ``d/2`` and
need both smoothnesses at least ``d/2`` above it. The test suite pins that
disagreement region exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
import numpy as np

from .errors import ConfigurationError
from .estimators import KINDS, SCHEMES
from .wavelet_basis import DyadicResolution

__all__ = [
    "TIE_TOL",
    "minimax_rate_exponent",
    "prediction_exponents",
    "ResolutionRule",
    "TuningFlags",
    "RegimeEntry",
    "RegimeReport",
    "regime_report",
    "regime_from_rates",
    "mse_decay",
    "rate_terms",
    "minimax_resolution",
    "minimax_exponents",
    "gstar",
    "FLAG_NAMES",
    "REGIME_COLUMNS",
]

# Parameters within this distance of a regime boundary count as on it, and
# boundary points belong to the smoother branch.
TIE_TOL = 1e-12
# Decay rates from encoding B are compared to this precision.
RATE_TOL = 1e-9
# Upper limit on a resolution exponent in the rate program.
MAX_EXPONENT = 8.0

FLAG_NAMES = (
    "pred_optimal_sufficient",
    "undersmooth_k1",
    "undersmooth_k2",
    "oversmooth_k1",
    "oversmooth_k2",
    "undersmooth_some",
    "oversmooth_some",
)


def _ge(x: float, y: float) -> bool:
    return x >= y - TIE_TOL


def _lt(x: float, y: float) -> bool:
    return not _ge(x, y)


def _check(alpha: float, beta: float, d: int) -> None:
    if alpha <= 0 or beta <= 0 or d < 1:
        raise ConfigurationError(f"need alpha, beta > 0 and d >= 1; got {alpha}, {beta}, {d}")


def minimax_rate_exponent(alpha: float, beta: float, d: int = 1) -> float:
    """MSE exponent ``e*``: 1 when ``(alpha+beta)/2 >= d/4``, else ``4(alpha+beta)/(2alpha+2beta+d)``."""
    _check(alpha, beta, d)
    if _ge((alpha + beta) / 2, d / 4):
        return 1.0
    return 4 * (alpha + beta) / (2 * alpha + 2 * beta + d)


def prediction_exponents(alpha: float, beta: float, d: int = 1) -> tuple[float, float]:
    """Exponents of the prediction-optimal resolutions ``n**(d/(2alpha+d))``, ``n**(d/(2beta+d))``."""
    return d / (2 * alpha + d), d / (2 * beta + d)


# =============================================================================
# Rate terms (encoding B ingredients)
# =============================================================================

# A term (cmin, cmax, const) is the monomial n**(cmin*amin + cmax*amax + const).


def rate_terms(
    kind: str, scheme: str, alpha: float, beta: float, d: int = 1
) -> tuple[list[tuple[float, float, float]], list[tuple[float, float, float]]]:
    """Worst-case bias and variance monomials for one estimator.

    NR has a single resolution; evaluate its terms with ``a1 = a2``.
    """
    kind, scheme = kind.upper(), scheme.lower()
    s = (alpha + beta) / d
    smooth_min, smooth_max = (-s, 0.0, 0.0), (0.0, -s, 0.0)
    one = (0.0, 0.0, -1.0)
    if kind == "NR":
        if scheme in ("single", "double"):
            return [smooth_min], [one, (1.0, 0.0, -2.0)]
        return [smooth_min, (1.0, 0.0, -1.0)], [one, (1.0, 0.0, -2.0), (2.0, 0.0, -3.0)]
    lead = smooth_max if kind == "IF" else smooth_min
    if scheme == "double":
        if kind == "INT":
            return [lead], [one, (1.0, 0.0, -2.0)]
        return [lead], [one, (0.0, 1.0, -2.0), (1.0, 1.0, -3.0)]
    single_var = [one, (2.0, 0.0, -2.0), (0.0, 1.0, -2.0), (1.0, 1.0, -3.0), (2.0, 1.0, -4.0)]
    if kind == "INT":
        return [lead, (1.0, 0.0, -1.0)], [one, (2.0, 0.0, -2.0)]
    if scheme == "single":
        return [lead, (1.0, 0.0, -1.0)], single_var
    own = [(0.0, 1.0, -1.0), (1.0, 1.0, -2.0)]
    if kind == "MC":
        return [lead] + own, single_var + [(2.0, 2.0, -5.0)]
    return [lead] + own, [one, (2.0, 0.0, -2.0), (0.0, 1.0, -2.0), (0.0, 2.0, -3.0),
                          (2.0, 1.0, -4.0), (2.0, 2.0, -5.0)]


def mse_decay(kind: str, scheme: str, alpha: float, beta: float, d: int, a1: float, a2: float) -> float:
    """Decay rate ``r`` with ``MSE ~ n**-r`` at exponents ``(a1, a2)``."""
    if kind.upper() == "NR":
        a1 = a2
    bias, var = rate_terms(kind, scheme, alpha, beta, d)
    lo, hi = min(a1, a2), max(a1, a2)
    decay = [-2 * (c0 * lo + c1 * hi + c2) for c0, c1, c2 in bias]
    decay += [-(c0 * lo + c1 * hi + c2) for c0, c1, c2 in var]
    return float(min(decay))


def _pieces(kind: str, scheme: str, alpha: float, beta: float, d: int, swap: bool) -> np.ndarray:
    """Affine decay pieces ``w . (a1, a2) + h`` as rows ``(w1, w2, h)`` on one ordering region."""
    bias, var = rate_terms(kind, scheme, alpha, beta, d)
    rows = []
    for mult, terms in ((2.0, bias), (1.0, var)):
        for c0, c1, c2 in terms:
            w = (c0, c1) if not swap else (c1, c0)
            rows.append((-mult * w[0], -mult * w[1], -mult * c2))
    return np.array(rows)


def _max_min(pieces: np.ndarray, cons: np.ndarray) -> float:
    """Maximise ``min_i pieces_i(a)`` over ``{a : G a <= q}`` in two dimensions.

    The optimum of a concave piecewise-affine function on a polygon sits at a
    vertex of the arrangement formed by the pairwise tie lines of the pieces
    and the constraint lines, so every pairwise intersection is a candidate.
    Returns ``-inf`` for an empty feasible set.
    """
    ties = [
        (pieces[i, 0] - pieces[j, 0], pieces[i, 1] - pieces[j, 1], pieces[j, 2] - pieces[i, 2])
        for i, j in itertools.combinations(range(len(pieces)), 2)
    ]
    lines = np.array(ties + [tuple(row) for row in cons], dtype=float)
    i, j = np.triu_indices(len(lines), 1)
    a = lines[i, :2]
    b = lines[j, :2]
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    ok = np.abs(det) > 1e-14
    det, a, b, ca, cb = det[ok], a[ok], b[ok], lines[i[ok], 2], lines[j[ok], 2]
    pts = np.stack([(ca * b[:, 1] - cb * a[:, 1]) / det, (a[:, 0] * cb - b[:, 0] * ca) / det], axis=1)
    feasible = np.all(pts @ cons[:, :2].T <= cons[:, 2] + 1e-10, axis=1)
    pts = pts[feasible]
    if pts.size == 0:
        return -math.inf
    values = (pts @ pieces[:, :2].T + pieces[:, 2]).min(axis=1)
    return float(values.max())


def _best_rate(
    kind: str, scheme: str, alpha: float, beta: float, d: int,
    lower: tuple[float, float] = (0.0, 0.0), upper: tuple[float, float] = (MAX_EXPONENT, MAX_EXPONENT),
) -> float:
    best = -math.inf
    for swap in (False, True):
        cons = [
            (-1.0, 0.0, -lower[0]), (1.0, 0.0, upper[0]),
            (0.0, -1.0, -lower[1]), (0.0, 1.0, upper[1]),
            (1.0, -1.0, 0.0) if not swap else (-1.0, 1.0, 0.0),
        ]
        if kind.upper() == "NR":
            cons.append((-1.0, 1.0, 0.0) if not swap else (1.0, -1.0, 0.0))
        best = max(best, _max_min(_pieces(kind, scheme, alpha, beta, d, swap), np.array(cons)))
    return best


# =============================================================================
# Regime reports
# =============================================================================


@dataclass(frozen=True)
class ResolutionRule:
    """Admissible exponents of one resolution: ``n**lo <~ k <~ n**hi``.

    ``kind`` is ``exact`` (``lo == hi``), ``window``, or ``free`` (any value,
    resolved by copying the other resolution).
    """

    kind: str
    lo: float | None = None
    hi: float | None = None

    def describe(self) -> str:
        if self.kind == "free":
            return "free"
        if self.kind == "exact":
            return f"n^{self.lo:.6g}"
        return f"[n^{self.lo:.6g}, n^{self.hi:.6g}]"


@dataclass(frozen=True)
class TuningFlags:
    """Which smoothing choices optimal tuning forces, relative to prediction-optimal."""

    pred_optimal_sufficient: bool = False
    undersmooth_k1: bool = False
    undersmooth_k2: bool = False
    oversmooth_k1: bool = False
    oversmooth_k2: bool = False
    undersmooth_some: bool = False
    oversmooth_some: bool = False

    def as_tuple(self) -> tuple[bool, ...]:
        return tuple(getattr(self, f) for f in FLAG_NAMES)


@dataclass(frozen=True)
class RegimeEntry:
    kind: str
    scheme: str
    best_exponent: float
    achievable: bool
    flags: TuningFlags
    kmin_rule: ResolutionRule
    kmax_rule: ResolutionRule

    def side_rules(self, kmax_side: str = "k1") -> tuple[ResolutionRule, ResolutionRule]:
        """Rules for ``(k1, k2)``; a free side inherits the other rule, NR has only ``k2``."""
        lo = self.kmax_rule if self.kmin_rule.kind == "free" else self.kmin_rule
        hi = self.kmin_rule if self.kmax_rule.kind == "free" else self.kmax_rule
        if self.kind == "NR":
            return _FREE, lo
        return (hi, lo) if kmax_side == "k1" else (lo, hi)


@dataclass(frozen=True)
class RegimeReport:
    """Minimax exponent and per-estimator regime summary at ``(alpha, beta, d)``."""

    alpha: float
    beta: float
    d: int
    minimax_exponent: float
    entries: dict[tuple[str, str], RegimeEntry] = field(default_factory=dict)
    n: int | None = None

    def __getitem__(self, key: tuple[str, str]) -> RegimeEntry:
        return self.entries[(key[0].upper(), key[1].lower())]

    def to_rows(self, kmax_side: str = "k1") -> list[dict]:
        """Flat rows in :data:`REGIME_COLUMNS` order, one per (kind, scheme)."""
        rows = []
        for (kind, scheme), e in self.entries.items():
            k1_rule, k2_rule = e.side_rules(kmax_side)
            f = e.flags
            rows.append({
                "alpha": self.alpha, "beta": self.beta, "d": self.d,
                "kind": kind, "scheme": scheme,
                "achievable": e.achievable, "bestExponent": e.best_exponent,
                "minimaxExponent": self.minimax_exponent,
                "predOptimalSufficient": f.pred_optimal_sufficient,
                "undersmoothK1": f.undersmooth_k1, "undersmoothK2": f.undersmooth_k2,
                "oversmoothK1": f.oversmooth_k1, "oversmoothK2": f.oversmooth_k2,
                "undersmoothSome": f.undersmooth_some, "oversmoothSome": f.oversmooth_some,
                "k1Rule": k1_rule.describe(), "k2Rule": k2_rule.describe(),
            })
        return rows


REGIME_COLUMNS = (
    "alpha", "beta", "d", "kind", "scheme", "achievable", "bestExponent", "minimaxExponent",
    "predOptimalSufficient", "undersmoothK1", "undersmoothK2", "oversmoothK1", "oversmoothK2",
    "undersmoothSome", "oversmoothSome", "k1Rule", "k2Rule",
)


def _best_exponent(kind: str, scheme: str, alpha: float, beta: float, d: int) -> float:
    delta = (alpha + beta) / 2
    star = minimax_rate_exponent(alpha, beta, d)
    if scheme == "double" and kind == "MC" and _lt(delta, d / 4):
        return 3 * (alpha + beta) / (alpha + beta + d)
    two_stage = 2 * (alpha + beta) / (alpha + beta + d)
    if scheme == "single" and kind in ("INT", "MC") and _lt(delta, d / 2):
        return two_stage
    if scheme == "none" and _lt(delta, d / 2):
        return two_stage
    return star


def _flags(kind: str, scheme: str, alpha: float, beta: float, d: int) -> TuningFlags:
    h = d / 2
    lo, hi = min(alpha, beta), max(alpha, beta)
    equal = abs(alpha - beta) <= TIE_TOL
    if scheme == "double" and kind in ("INT", "MC"):
        return TuningFlags(
            pred_optimal_sufficient=_ge(lo, h),
            undersmooth_k1=_lt(beta, h),
            undersmooth_k2=_lt(alpha, h),
            undersmooth_some=_lt(lo, h),
        )
    if kind == "IF" and scheme in ("double", "single"):
        rough = _lt(hi, h)
        return TuningFlags(
            pred_optimal_sufficient=not rough,
            undersmooth_some=rough,
            oversmooth_some=rough and scheme == "single",
        )
    if kind == "NR" and scheme in ("double", "single"):
        return TuningFlags(pred_optimal_sufficient=_ge(alpha, h), undersmooth_k2=_lt(alpha, h),
                           undersmooth_some=_lt(alpha, h))
    if kind == "NR":
        need = _lt(alpha, min(beta, h))
        return TuningFlags(pred_optimal_sufficient=not need, undersmooth_k2=need, undersmooth_some=need)
    u1 = _lt(beta, min(alpha, h)) and not equal
    u2 = _lt(alpha, min(beta, h)) and not equal
    if kind == "INT" or scheme == "single":
        return TuningFlags(
            pred_optimal_sufficient=not (u1 or u2),
            undersmooth_k1=u1,
            undersmooth_k2=u2,
            undersmooth_some=u1 or u2,
        )
    if kind == "MC":
        return TuningFlags(
            pred_optimal_sufficient=not (u1 or u2),
            undersmooth_k1=u1, undersmooth_k2=u2,
            oversmooth_k1=u2, oversmooth_k2=u1,
            undersmooth_some=u1 or u2, oversmooth_some=u1 or u2,
        )
    # IF without splitting: the rougher nuisance must be oversmoothed.
    o1, o2 = u2, u1
    return TuningFlags(
        pred_optimal_sufficient=not (o1 or o2),
        oversmooth_k1=o1, oversmooth_k2=o2, oversmooth_some=o1 or o2,
    )


def _exact(x: float) -> ResolutionRule:
    return ResolutionRule("exact", x, x)


def _window(lo: float, hi: float) -> ResolutionRule:
    return ResolutionRule("window", lo, hi)


_FREE = ResolutionRule("free")


def _rules(kind: str, scheme: str, alpha: float, beta: float, d: int) -> tuple[ResolutionRule, ResolutionRule]:
    """(kmin rule, kmax rule) achieving the best exponent; NR uses the kmin rule for its k."""
    ab = alpha + beta
    delta = ab / 2
    root_n = _ge(delta, d / 4)
    smooth = d / (2 * ab)
    if kind == "NR" and scheme in ("single", "double"):
        return (_window(smooth, 1.0) if root_n else _exact(2 * d / (2 * ab + d))), _FREE
    if scheme == "double":
        if kind == "INT":
            return (_window(smooth, 1.0) if root_n else _exact(2 * d / (2 * ab + d))), _FREE
        if kind == "MC":
            r = _window(smooth, 1.0) if root_n else _exact(3 * d / (2 * ab + 2 * d))
            return r, r
        if root_n:
            return _FREE, _window(smooth, 1.0)
        return _window(0.0, 1.0), _exact(2 * d / (2 * ab + d))
    if scheme == "single" and kind == "IF":
        if root_n:
            return _window(0.0, 0.5), _window(smooth, 1.0)
        return _window(0.0, d / (2 * ab + d)), _exact(2 * d / (2 * ab + d))
    big = _ge(delta, d / 2)
    star = d / (ab + d)
    if scheme == "single":
        kmin = _window(smooth, 0.5) if big else _exact(star)
        if kind == "INT":
            return kmin, _FREE
        return kmin, (_window(kmin.hi, 1.0) if big else _window(star, 2 * star))
    if big:
        r = _window(smooth, 0.5)
        if kind == "MC":
            return r, r
        if kind == "IF":
            return _FREE, r
        return r, _FREE
    r = _exact(star)
    return r, (r if kind in ("MC", "IF") else _FREE)


def regime_report(alpha: float, beta: float, d: int = 1, n: int | None = None) -> RegimeReport:
    """Closed-form regime summary for every kind and scheme (encoding A)."""
    _check(alpha, beta, d)
    star = minimax_rate_exponent(alpha, beta, d)
    entries = {}
    for kind in KINDS:
        for scheme in SCHEMES:
            best = _best_exponent(kind, scheme, alpha, beta, d)
            kmin_rule, kmax_rule = _rules(kind, scheme, alpha, beta, d)
            entries[(kind, scheme)] = RegimeEntry(
                kind, scheme, best, abs(best - star) <= TIE_TOL,
                _flags(kind, scheme, alpha, beta, d), kmin_rule, kmax_rule,
            )
    return RegimeReport(alpha, beta, d, star, entries, n)


def regime_from_rates(kind: str, scheme: str, alpha: float, beta: float, d: int = 1) -> RegimeEntry:
    """Regime summary derived by optimising the rate terms directly (encoding B).

    A smoothing flag is set when restricting the exponent(s) to one side of the
    prediction-optimal exponent strictly lowers the best attainable decay.
    """
    kind, scheme = kind.upper(), scheme.lower()
    _check(alpha, beta, d)
    best = _best_rate(kind, scheme, alpha, beta, d)
    p1, p2 = prediction_exponents(alpha, beta, d)
    if kind == "NR":
        p1 = p2
    big = MAX_EXPONENT

    def worse(lower=(0.0, 0.0), upper=(big, big)) -> bool:
        return _best_rate(kind, scheme, alpha, beta, d, lower, upper) < best - RATE_TOL

    nr = kind == "NR"
    flags = TuningFlags(
        pred_optimal_sufficient=mse_decay(kind, scheme, alpha, beta, d, p1, p2) >= best - RATE_TOL,
        undersmooth_k1=False if nr else worse(upper=(p1, big)),
        undersmooth_k2=worse(upper=(big, p2)),
        oversmooth_k1=False if nr else worse(lower=(p1, 0.0)),
        oversmooth_k2=worse(lower=(0.0, p2)),
        undersmooth_some=worse(upper=(p1, p2)),
        oversmooth_some=worse(lower=(p1, p2)),
    )
    star = minimax_rate_exponent(alpha, beta, d)
    return RegimeEntry(kind, scheme, best, best >= star - RATE_TOL, flags, _FREE, _FREE)


# =============================================================================
# Concrete resolutions
# =============================================================================


def _pick(rule: ResolutionRule, log2n: float, d: int) -> int | None:
    if rule.kind == "free":
        return None
    if rule.kind == "exact":
        return max(math.floor(rule.lo * log2n / d + 0.5), 0)
    lo, hi = rule.lo * log2n / d, rule.hi * log2n / d
    return max(math.floor((lo + hi) / 2), 0)


def minimax_exponents(
    kind: str, scheme: str, alpha: float, beta: float, d: int = 1, kmax_side: str = "k1"
) -> tuple[float, float]:
    """Ideal exponents ``(a1, a2)`` behind :func:`minimax_resolution` (window midpoints)."""
    kmin_rule, kmax_rule = _rules(kind.upper(), scheme.lower(), alpha, beta, d)
    mid = lambda r: None if r.kind == "free" else (r.lo + r.hi) / 2  # noqa: E731
    lo, hi = mid(kmin_rule), mid(kmax_rule)
    lo = hi if lo is None else lo
    hi = lo if hi is None else hi
    return (hi, lo) if kmax_side == "k1" else (lo, hi)


def minimax_resolution(
    kind: str,
    scheme: str,
    alpha: float,
    beta: float,
    d: int = 1,
    n: int = 1024,
    kmax_side: str = "k1",
) -> tuple[DyadicResolution, DyadicResolution]:
    """Dyadic ``(k1, k2)`` following the rate-optimal rule for the estimator.

    Exact rules round ``a log2(n) / d`` to the nearest level (halves up);
    windows take ``floor`` of the midpoint of the level window. A free side
    copies the other side. When the rule separates ``kmin`` from ``kmax``,
    ``kmax_side`` says which resolution carries ``kmax``.
    """
    kind, scheme = kind.upper(), scheme.lower()
    if kind not in KINDS or scheme not in SCHEMES:
        raise ConfigurationError(f"invalid estimator ({kind}, {scheme})")
    if kmax_side not in ("k1", "k2"):
        raise ConfigurationError(f"kmax_side must be 'k1' or 'k2', got {kmax_side!r}")
    _check(alpha, beta, d)
    log2n = math.log2(n)
    kmin_rule, kmax_rule = _rules(kind, scheme, alpha, beta, d)
    jmin, jmax = _pick(kmin_rule, log2n, d), _pick(kmax_rule, log2n, d)
    jmin = jmax if jmin is None else jmin
    jmax = jmin if jmax is None else jmax
    assert jmin is not None and jmax is not None
    jmin = min(jmin, jmax)
    small, large = DyadicResolution(jmin, d), DyadicResolution(jmax, d)
    return (large, small) if kmax_side == "k1" else (small, large)


def gstar(alpha: float, beta: float, d: int = 1) -> float:
    """Density-smoothness threshold ``g*(alpha, beta)`` for the unknown-density mode.

    With ``delta = (alpha+beta)/2`` and ``Delta = |alpha/beta - 1|``,

        g* = 2 delta (Delta+1)(1 - 4delta/d)
             / ((Delta+2)(1 + 4delta/d) - 4 (delta/d)(1 - 4delta/d)(Delta+1)).
    """
    _check(alpha, beta, d)
    delta = (alpha + beta) / 2
    big_delta = abs(alpha / beta - 1)
    t = 4 * delta / d
    num = 2 * delta * (big_delta + 1) * (1 - t)
    den = (big_delta + 2) * (1 + t) - 4 * (delta / d) * (1 - t) * (big_delta + 1)
    return num / den
