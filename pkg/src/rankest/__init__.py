"""Rank-based estimation for semiparametric single-index models.

The package fits coefficient vectors that maximise pairwise rank
objectives (maximum rank correlation and three relatives), estimates
their sandwich covariance by numerical differentiation, and ships a
reproducible Monte Carlo lab for coverage, covariance-tuning and
rate-of-convergence studies.
"""

from .concordance import FenwickTree, concordant_weight_sum, fast_concordance
from .covariance import (
    CovarianceEstimate,
    default_step,
    delta_v_matrices,
    estimate_covariance,
    finite_difference_matrices,
    projection_ci,
    step_for_multiplier,
)
from .data import (
    Beta,
    EstimatorSpec,
    Sample,
    SearchDomain,
    full_coefficients,
    validate_sample,
)
from .errors import (
    DegenerateSample,
    DimensionMismatch,
    InvalidArgument,
    InvalidStep,
    MissingColumn,
    NonFiniteValue,
    NonPositiveVariance,
    RankestError,
    SingularHessian,
)
from .estimator import RankEstimator
from .fitting import FitOptions, FitResult, coordinate_breakpoints, fit, maximize_coordinate
from .objectives import (
    ObjectiveValue,
    hoeffding_check,
    objective,
    tau_n,
    tau_values,
)
from .simulation import (
    CoverageReport,
    DgpConfig,
    MaeReport,
    MonteCarloConfig,
    RateCheckReport,
    generate_binary_choice,
    kde,
    normality_tests,
    run_coverage,
    run_mae,
    run_rate_check,
)

__all__ = [
    "Beta",
    "CoverageReport",
    "CovarianceEstimate",
    "DegenerateSample",
    "DgpConfig",
    "DimensionMismatch",
    "EstimatorSpec",
    "FenwickTree",
    "FitOptions",
    "FitResult",
    "InvalidArgument",
    "InvalidStep",
    "MaeReport",
    "MissingColumn",
    "MonteCarloConfig",
    "NonFiniteValue",
    "NonPositiveVariance",
    "ObjectiveValue",
    "RankEstimator",
    "RankestError",
    "RateCheckReport",
    "Sample",
    "SearchDomain",
    "SingularHessian",
    "concordant_weight_sum",
    "coordinate_breakpoints",
    "default_step",
    "delta_v_matrices",
    "estimate_covariance",
    "fast_concordance",
    "finite_difference_matrices",
    "fit",
    "full_coefficients",
    "generate_binary_choice",
    "hoeffding_check",
    "kde",
    "maximize_coordinate",
    "normality_tests",
    "objective",
    "projection_ci",
    "run_coverage",
    "run_mae",
    "run_rate_check",
    "step_for_multiplier",
    "tau_n",
    "tau_values",
    "validate_sample",
]

__version__ = "0.1.0"
