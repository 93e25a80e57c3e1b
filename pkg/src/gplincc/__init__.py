"""Conditional calibration of a chained linear model with Gaussian-process priors.

The calibration function ``theta(lambda)`` is given independent GP priors per
component; with a model that is linear in theta, its posterior at a design
of lambda values and its predictive distribution at new lambdas are Gaussian
and available in closed form.
"""

__version__ = "0.1.0"

from ._errors import FittingError, GPLinCCError, InvalidArgumentError, NumericError, RankError
from .benchmarks import example1_generate, example2_generate, example3_generate
from .design import DesignSet, LambdaDistribution, lhs_uniform, sample_iid
from .diagnostics import (
    CoverageReport,
    compensation_coverage,
    loo_predictive,
    model_output_predictive,
    mse_per_component,
)
from .hyperparams import OptimizerConfig, fit_hyperparameters, neg_log_marginal, profile_beta
from .kernels import ComponentKernel, VectorizationLayout, build_prior_cov, cross_cov, kernel_matrix, matern52
from .linearization import (
    CalibrationData,
    LinearizedModel,
    ObservationSet,
    SimulationBundle,
    assemble_calibration_matrices,
    fit_linear_coefficients,
)
from .params import HyperParams
from .posterior import GaussianDist, GPPrior, TrendModel, build_prior, posterior_theta
from .predictive import PredictiveTheta, predict, target_gp, target_jeffreys
