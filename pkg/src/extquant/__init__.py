"""Extreme quantile estimation toolkit.

Empirical order-statistic quantiles, pinball-loss quantile regression
(constant, linear, and MLP quantile functions), generalised Pareto
peaks-over-threshold tail extrapolation, and a deterministic Monte Carlo
harness comparing the empirical and GP estimators at extreme levels.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .distributions import (
    Frechet3,
    Gamma4,
    GenPareto,
    GpParams,
    LogNormal01,
    Normal01,
    STUDY_DISTRIBUTIONS,
)
from .estimators import (
    ConvergenceError,
    DegenerateSampleError,
    GpFit,
    InsufficientDataError,
    TailModel,
    empirical_quantile,
    fit_gp_mle,
    fit_tail,
    gp_quantile,
)
from .pinball import (
    RegressionData,
    TrainConfig,
    fit_quantile_model,
    pinball_loss,
    pinball_risk,
)
from .rng import substream
from .simstudy import (
    SimSummary,
    StudyConfig,
    default_tau_grid,
    estimate_expected_max,
    run_replicate,
    run_study,
)

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    "Frechet3",
    "Gamma4",
    "GenPareto",
    "GpParams",
    "LogNormal01",
    "Normal01",
    "STUDY_DISTRIBUTIONS",
    "ConvergenceError",
    "DegenerateSampleError",
    "GpFit",
    "InsufficientDataError",
    "TailModel",
    "empirical_quantile",
    "fit_gp_mle",
    "fit_tail",
    "gp_quantile",
    "RegressionData",
    "TrainConfig",
    "fit_quantile_model",
    "pinball_loss",
    "pinball_risk",
    "substream",
    "SimSummary",
    "StudyConfig",
    "default_tau_grid",
    "estimate_expected_max",
    "run_replicate",
    "run_study",
]
