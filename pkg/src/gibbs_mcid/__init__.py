"""Likelihood-free posterior inference for the minimum clinically important
difference (MCID): risk-based point estimation, exact and MCMC posterior
sampling, loss-scale calibration, bootstrap baselines, and a Monte Carlo
study harness."""

from ._kernels import active_backend, available_backends, set_backend, set_threads
from .calibration import CalibrationResult, calibrate_omega, estimate_coverage
from .errors import (
    ConfigError,
    DomainError,
    GibbsMcidError,
    InvariantViolationError,
    MixingError,
    NoRootError,
    NumericalError,
    ValidationError,
)
from .experiments import (
    ExperimentReport,
    LogisticComparison,
    MethodRow,
    PriorComparisonReport,
    RateReport,
    informative_prior_demo,
    run_logistic_comparison,
    run_rate_check,
    run_study,
)
from .gibbs import (
    FlatPrior,
    NormalPrior,
    PiecewisePosterior,
    PosteriorDraws,
    PosteriorSummary,
    exact_posterior,
    log_kernel,
    sample_exact,
    sample_metropolis,
    summarize,
)
from .mestimator import EstimateResult, bootstrap_ci, candidate_set, m_estimate
from .risk import (
    RiskCurve,
    empirical_risk,
    empirical_risk_curve,
    loss,
    population_risk,
    population_risk_curve,
    population_risk_difference,
    risk_gap_exponent_check,
    smoothed_empirical_risk,
)
from .scenarios import (
    BUILTIN_NAMES,
    CdfLink,
    Cusp,
    Dataset,
    Gamma,
    Jump,
    Normal,
    NormalMixture,
    Scenario,
    TableEta,
    Uniform,
    builtin_scenario,
    eta_value,
    generate,
    true_mcid,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES",
    "CalibrationResult",
    "CdfLink",
    "ConfigError",
    "Cusp",
    "Dataset",
    "DomainError",
    "EstimateResult",
    "ExperimentReport",
    "FlatPrior",
    "Gamma",
    "GibbsMcidError",
    "InvariantViolationError",
    "Jump",
    "LogisticComparison",
    "MethodRow",
    "MixingError",
    "NoRootError",
    "Normal",
    "NormalMixture",
    "NormalPrior",
    "NumericalError",
    "PiecewisePosterior",
    "PosteriorDraws",
    "PosteriorSummary",
    "PriorComparisonReport",
    "RateReport",
    "RiskCurve",
    "Scenario",
    "TableEta",
    "Uniform",
    "ValidationError",
    "active_backend",
    "available_backends",
    "bootstrap_ci",
    "builtin_scenario",
    "calibrate_omega",
    "candidate_set",
    "empirical_risk",
    "empirical_risk_curve",
    "estimate_coverage",
    "eta_value",
    "exact_posterior",
    "generate",
    "informative_prior_demo",
    "log_kernel",
    "loss",
    "m_estimate",
    "population_risk",
    "population_risk_curve",
    "population_risk_difference",
    "risk_gap_exponent_check",
    "run_logistic_comparison",
    "run_rate_check",
    "run_study",
    "sample_exact",
    "sample_metropolis",
    "set_backend",
    "set_threads",
    "smoothed_empirical_risk",
    "summarize",
    "true_mcid",
]
