"""Doubly robust estimation of the expected conditional covariance with Haar projection nuisances."""

from .errors import ConfigurationError, DomainError
from .wavelet_basis import (
    DyadicResolution,
    PiecewiseConstantFn,
    WaveletSeriesFunction,
    cell_index,
    detail_coefficients,
    eval_series,
    inner_product,
    kernel_eval,
    project,
)
from .synthetic_models import DGP, Dataset, NoiseSpec, constant_dgp, sample, true_psi, worst_case_dgp
from .nuisance import (
    FittedDensity,
    FittedRegressor,
    density_resolution,
    fit_density,
    fit_regression,
    prediction_optimal_k,
)
from .estimators import EstimatorConfig, FoldLayout, cross_fit, estimate, fold_layout
from .tuning import (
    RegimeReport,
    gstar,
    minimax_rate_exponent,
    minimax_resolution,
    regime_from_rates,
    regime_report,
)
from .oracle import (
    exact_constant_bias,
    exact_nonlinearity_bias,
    exact_own_observation_bias,
    exact_projection_bias,
    kernel_moment_check,
    oracle_check,
)
from .rate_lab import (
    DGPSpec,
    EstimatorSpec,
    ExperimentSpec,
    RateResult,
    TuningRule,
    compare_to_theory,
    fit_loglog_slope,
    run_experiment,
)
from .config import dump_config, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "DomainError",
    "DyadicResolution",
    "PiecewiseConstantFn",
    "WaveletSeriesFunction",
    "cell_index",
    "detail_coefficients",
    "eval_series",
    "inner_product",
    "kernel_eval",
    "project",
    "DGP",
    "Dataset",
    "NoiseSpec",
    "constant_dgp",
    "sample",
    "true_psi",
    "worst_case_dgp",
    "FittedDensity",
    "FittedRegressor",
    "density_resolution",
    "fit_density",
    "fit_regression",
    "prediction_optimal_k",
    "EstimatorConfig",
    "FoldLayout",
    "cross_fit",
    "estimate",
    "fold_layout",
    "RegimeReport",
    "gstar",
    "minimax_rate_exponent",
    "minimax_resolution",
    "regime_from_rates",
    "regime_report",
    "exact_constant_bias",
    "exact_nonlinearity_bias",
    "exact_own_observation_bias",
    "exact_projection_bias",
    "kernel_moment_check",
    "oracle_check",
    "DGPSpec",
    "EstimatorSpec",
    "ExperimentSpec",
    "RateResult",
    "TuningRule",
    "compare_to_theory",
    "fit_loglog_slope",
    "run_experiment",
    "dump_config",
    "load_config",
    "parse_config",
]
