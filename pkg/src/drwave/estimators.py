"""
Plug-in and bias-corrected estimators of ``psi = E[Cov(A, Y | X)]``.

Four estimators are provided, each under three splitting schemes:

* ``INT``: ``mean(AY) - integral p_hat b_hat w``, with the integral computed exactly;
* ``MC``:  ``mean(AY) - mean(p_hat(X) b_hat(X))`` over a held-out fold;
* ``NR``:  ``mean(A (Y - b_hat(X)))``, or ``mean(Y (A - p_hat(X)))`` when swapped;
* ``IF``:  ``mean((A - p_hat(X)) (Y - b_hat(X)))``.

A :class:`FoldLayout` says which fold plays which role. ``none`` puts every
role on one fold, ``single`` fits both nuisances on a shared fold, and
``double`` fits them on separate folds. In the unknown-density mode each
nuisance is weighted by a clamped density estimate from its own extra fold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, DomainError
from .nuisance import (
    DEFAULT_DENSITY_BOUNDS,
    FittedDensity,
    FittedRegressor,
    fit_density,
    fit_regression,
)
from .synthetic_models import Dataset
from .wavelet_basis import DyadicResolution, PiecewiseConstantFn, cell_index

__all__ = [
    "KINDS",
    "SCHEMES",
    "DENSITY_MODES",
    "EstimatorConfig",
    "FoldLayout",
    "fold_layout",
    "estimate",
    "cross_fit",
]

KINDS = ("INT", "MC", "NR", "IF")
SCHEMES = ("none", "single", "double")
DENSITY_MODES = ("uniform", "known", "unknown")


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator kind, splitting scheme and nuisance resolutions.

    Parameters
    ----------
    kind : {"INT", "MC", "NR", "IF"}
    scheme : {"none", "single", "double"}
    k1, k2 : DyadicResolution
        Resolutions of ``p_hat`` and ``b_hat``. ``NR`` uses ``k2`` only, for
        whichever nuisance it fits.
    cross_fit : bool
        Average over cyclic rotations of the fold roles.
    density_mode : {"uniform", "known", "unknown"}
        Weight ``w`` in the regression estimators: one, the known design
        density, or a clamped estimate fitted on a separate fold.
    swap_roles : bool
        ``NR`` only: fit ``p`` and use ``mean(Y (A - p_hat(X)))``.
    density_gamma, density_c, density_bounds
        Smoothness, constant and clamp ``[M1, M2]`` of the density estimate.
    """

    kind: str
    scheme: str
    k1: DyadicResolution
    k2: DyadicResolution
    cross_fit: bool = False
    density_mode: str = "uniform"
    swap_roles: bool = False
    density_gamma: float | None = None
    density_c: float = 1.0
    density_bounds: tuple[float, float] = DEFAULT_DENSITY_BOUNDS

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", str(self.kind).upper())
        object.__setattr__(self, "scheme", str(self.scheme).lower())
        object.__setattr__(self, "density_mode", str(self.density_mode).lower())
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.density_mode not in DENSITY_MODES:
            raise ConfigurationError(
                f"density_mode must be one of {DENSITY_MODES}, got {self.density_mode!r}"
            )
        if self.k1.dim != self.k2.dim:
            raise ConfigurationError(f"k1 and k2 dimensions differ: {self.k1} vs {self.k2}")
        if self.density_mode == "unknown":
            if self.scheme != "double":
                raise ConfigurationError("the unknown-density mode needs the double scheme")
            if self.density_gamma is None or self.density_gamma <= 0:
                raise ConfigurationError("the unknown-density mode needs density_gamma > 0")
        if self.cross_fit and self.scheme == "none":
            raise ConfigurationError("cross-fitting needs a split scheme")
        if self.swap_roles and self.kind != "NR":
            raise ConfigurationError("swap_roles applies to NR only")

    @property
    def dim(self) -> int:
        return self.k1.dim


@dataclass(frozen=True)
class FoldLayout:
    """Fold count and the fold index assigned to each role.

    Roles: ``p_fit``, ``b_fit``, ``p_density``, ``b_density``, ``int_density``,
    ``ay_mean``, ``mc_eval`` and ``eval`` (the NR and IF averaging fold).
    """

    m: int
    roles: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "roles", MappingProxyType(dict(self.roles)))
        if any(not 0 <= f < self.m for f in self.roles.values()):
            raise ConfigurationError(f"role folds must lie in [0, {self.m})")

    @property
    def by_fold(self) -> dict[int, tuple[str, ...]]:
        out: dict[int, list[str]] = {f: [] for f in range(self.m)}
        for role, f in self.roles.items():
            out[f].append(role)
        return {f: tuple(r) for f, r in out.items()}

    def rotated(self, shift: int) -> "FoldLayout":
        return FoldLayout(self.m, {r: (f + shift) % self.m for r, f in self.roles.items()})


_KNOWN_LAYOUTS: dict[tuple[str, str], dict[str, int]] = {
    ("INT", "double"): {"p_fit": 0, "b_fit": 1, "ay_mean": 2},
    ("MC", "double"): {"p_fit": 0, "b_fit": 1, "ay_mean": 2, "mc_eval": 3},
    ("IF", "double"): {"p_fit": 0, "b_fit": 1, "eval": 2},
    ("NR", "double"): {"b_fit": 0, "eval": 1},
    ("INT", "single"): {"p_fit": 0, "b_fit": 0, "ay_mean": 1},
    ("MC", "single"): {"p_fit": 0, "b_fit": 0, "ay_mean": 1, "mc_eval": 2},
    ("IF", "single"): {"p_fit": 0, "b_fit": 0, "eval": 1},
    ("NR", "single"): {"b_fit": 0, "eval": 1},
}

_UNKNOWN_LAYOUTS: dict[str, dict[str, int]] = {
    "INT": {"p_fit": 0, "p_density": 1, "b_fit": 2, "b_density": 3, "ay_mean": 4, "int_density": 5},
    "MC": {"p_fit": 0, "p_density": 1, "b_fit": 2, "b_density": 3, "ay_mean": 4, "mc_eval": 5},
    "NR": {"b_fit": 0, "b_density": 1, "eval": 2},
    "IF": {"p_fit": 0, "p_density": 1, "b_fit": 2, "b_density": 3, "eval": 4},
}

_NO_SPLIT_ROLES = {
    "INT": ("p_fit", "b_fit", "ay_mean"),
    "MC": ("p_fit", "b_fit", "ay_mean", "mc_eval"),
    "NR": ("b_fit", "eval"),
    "IF": ("p_fit", "b_fit", "eval"),
}


def fold_layout(kind: str, scheme: str, density_mode: str = "uniform") -> FoldLayout:
    """Fold count and role assignment for an estimator.

    ``NR`` has a single nuisance, so its ``double`` layout equals ``single``.
    """
    kind, scheme, density_mode = kind.upper(), scheme.lower(), density_mode.lower()
    if kind not in KINDS or scheme not in SCHEMES or density_mode not in DENSITY_MODES:
        raise ConfigurationError(f"invalid combination ({kind}, {scheme}, {density_mode})")
    if density_mode == "unknown":
        if scheme != "double":
            raise ConfigurationError("the unknown-density mode needs the double scheme")
        roles = _UNKNOWN_LAYOUTS[kind]
    elif scheme == "none":
        roles = {r: 0 for r in _NO_SPLIT_ROLES[kind]}
    else:
        roles = _KNOWN_LAYOUTS[(kind, scheme)]
    return FoldLayout(max(roles.values()) + 1, roles)


# =============================================================================
# Evaluation
# =============================================================================


def _fit(
    config: EstimatorConfig, folds: list[Dataset], roles: Mapping[str, int], which: str
) -> FittedRegressor:
    res = config.k1 if which == "p" else config.k2
    if config.kind == "NR":
        res = config.k2
    fit_fold = roles[f"{which}_fit"] if f"{which}_fit" in roles else roles["b_fit"]
    weight: str | FittedDensity
    if config.density_mode == "unknown":
        dens_role = f"{which}_density" if f"{which}_density" in roles else "b_density"
        weight = _density(config, folds, roles[dens_role])
    else:
        weight = config.density_mode
    return fit_regression(folds[fit_fold], "A" if which == "p" else "Y", res, weight, fit_fold)


def _density(config: EstimatorConfig, folds: list[Dataset], fold: int) -> FittedDensity:
    assert config.density_gamma is not None
    return fit_density(folds[fold], config.density_gamma, config.density_c, config.density_bounds, fold)


def _at(fit: FittedRegressor, data: Dataset) -> np.ndarray:
    return fit.values[cell_index(data.x, fit.resolution, check=False)]


def _integral_weight(
    config: EstimatorConfig, folds: list[Dataset], roles: Mapping[str, int]
) -> PiecewiseConstantFn | None:
    if config.density_mode == "unknown":
        return _density(config, folds, roles["int_density"]).fn
    if config.density_mode == "known":
        return folds[0].density
    return None


def _triple_integral(
    f: PiecewiseConstantFn, g: PiecewiseConstantFn, w: PiecewiseConstantFn | None
) -> float:
    level = max(f.level, g.level, w.level if w is not None else 0)
    prod = f.at_level(level).values * g.at_level(level).values
    if w is not None:
        prod = prod * w.at_level(level).values
    return float(prod.sum()) / (1 << (level * f.dim))


def _estimate_on_folds(
    config: EstimatorConfig, folds: list[Dataset], roles: Mapping[str, int]
) -> float:
    kind = config.kind
    if kind == "NR":
        ev = folds[roles["eval"]]
        if config.swap_roles:
            p_hat = _fit(config, folds, roles, "p")
            return float(np.mean(ev.y * (ev.a - _at(p_hat, ev))))
        b_hat = _fit(config, folds, roles, "b")
        return float(np.mean(ev.a * (ev.y - _at(b_hat, ev))))
    p_hat = _fit(config, folds, roles, "p")
    b_hat = _fit(config, folds, roles, "b")
    if kind == "IF":
        ev = folds[roles["eval"]]
        return float(np.mean((ev.a - _at(p_hat, ev)) * (ev.y - _at(b_hat, ev))))
    ay = folds[roles["ay_mean"]]
    ay_mean = float(np.mean(ay.a * ay.y))
    if kind == "INT":
        return ay_mean - _triple_integral(p_hat.fn, b_hat.fn, _integral_weight(config, folds, roles))
    ev = folds[roles["mc_eval"]]
    return ay_mean - float(np.mean(_at(p_hat, ev) * _at(b_hat, ev)))


def _check_data(config: EstimatorConfig, data: Dataset, m: int) -> list[Dataset]:
    if data.dim != config.dim:
        raise DomainError(f"data dimension {data.dim} differs from resolution dimension {config.dim}")
    if len(data) < m:
        raise DomainError(f"{len(data)} rows cannot fill {m} nonempty folds")
    return data.folds(m)


def estimate(config: EstimatorConfig, data: Dataset) -> float:
    """Point estimate of ``psi``; delegates to :func:`cross_fit` when requested.

    Rows are truncated to a multiple of the fold count. Folds come from
    ``data.fold_ids`` when present, otherwise from contiguous blocks.
    """
    if config.cross_fit:
        return cross_fit(config, data)
    layout = fold_layout(config.kind, config.scheme, config.density_mode)
    folds = _check_data(config, data, layout.m)
    return _estimate_on_folds(config, folds, layout.roles)


def cross_fit(config: EstimatorConfig, data: Dataset) -> float:
    """Average of the estimates over the ``m`` cyclic rotations of fold roles."""
    if not config.cross_fit:
        raise ConfigurationError("cross_fit needs config.cross_fit=True")
    layout = fold_layout(config.kind, config.scheme, config.density_mode)
    folds = _check_data(config, data, layout.m)
    vals = [_estimate_on_folds(config, folds, layout.rotated(r).roles) for r in range(layout.m)]
    return float(np.mean(vals))
