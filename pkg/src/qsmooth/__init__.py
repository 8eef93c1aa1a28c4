"""Nonparametric quantile regression smoothers.

``method_r_fit`` is a running-interval smoother built on the Harrell-Davis
quantile estimator and re-smoothed with tri-cube weighted least squares.
``fit_auto`` is a quadratic B-spline quantile smoother with information
criterion knot selection, and ``run_cell`` / ``run_grid`` compare the two
by Monte Carlo on g-and-h data.
"""
from .core_stats import (
    DegenerateScaleError,
    UndefinedCorrelationError,
    hd_quantile,
    hd_weights,
    inv_norm_cdf,
    kendall_tau,
    pinball,
    reg_inc_beta,
    robust_scale,
)
from .gh_model import (
    GhParams,
    VariancePattern,
    generate_dataset,
    gh_moments,
    gh_quantile,
    gh_transform,
    lambda_at,
    true_conditional_quantile,
)
from .sim_harness import CellReport, SimConfig, criteria_for_fit, run_cell, run_grid, table2_configs
from .smoother_r import (
    PairedSample,
    QuantileFit,
    lowess_resmooth,
    method_r_fit,
    neighborhood,
    running_interval_fit,
    tricube_weights,
)
from .spline_baseline import SplineModel, bspline_basis, fit_auto, fit_quantile_spline, sic_score

__version__ = "0.1.0"

__all__ = [
    "CellReport",
    "DegenerateScaleError",
    "GhParams",
    "PairedSample",
    "QuantileFit",
    "SimConfig",
    "SplineModel",
    "UndefinedCorrelationError",
    "VariancePattern",
    "bspline_basis",
    "criteria_for_fit",
    "fit_auto",
    "fit_quantile_spline",
    "generate_dataset",
    "gh_moments",
    "gh_quantile",
    "gh_transform",
    "hd_quantile",
    "hd_weights",
    "inv_norm_cdf",
    "kendall_tau",
    "lambda_at",
    "lowess_resmooth",
    "method_r_fit",
    "neighborhood",
    "pinball",
    "reg_inc_beta",
    "robust_scale",
    "run_cell",
    "run_grid",
    "running_interval_fit",
    "sic_score",
    "table2_configs",
    "tricube_weights",
    "true_conditional_quantile",
]
