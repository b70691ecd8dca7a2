"""Multifidelity Gaussian-process surrogate modeling.

Low-fidelity surrogate predictions become extra input features of a
single high-fidelity GP, alongside autoregressive and joint multi-output
baselines, with ADAM-based marginal-likelihood hyperparameter tuning and
a reproducible benchmark harness.
"""

from .analytic import AnalyticProblem, gen_analytic
from .cokriging import (
    CokrigingModel,
    CokrigingParams,
    fit_cokriging_at,
    joint_gram,
    train_cokriging,
)
from .data import DataSet, MFDataset, Standardizer
from .errors import (
    CapacityError,
    ConfigurationError,
    DataFormatError,
    NumericalError,
    OptimizationError,
)
from .estimators import (
    KOHModel,
    KrigingModel,
    LevelSurrogate,
    NARGPModel,
    ProposedModel,
    SurrogateSpec,
    TrainConfig,
    build_features,
    train_koh,
    train_kriging,
    train_nargp,
    train_proposed,
)
from .gp import (
    GPHyperparams,
    MLLProblem,
    PosteriorPrediction,
    TrainedGP,
    fit_gp,
    kernel_matrix,
    log_marginal_likelihood,
    mll_gradient,
    posterior,
)
from .kernels import ARDKernel, ConstantMean, LinearMean, NARGPKernel, ZeroMean, mean_eval
from .metrics import MetricsReport, ci_coverage, gp_rmse, log_ml_ratio, r_squared, rmse
from .optimize import (
    AdamState,
    MLLFit,
    OptimizerConfig,
    adam_step,
    from_unconstrained,
    maximize_mll,
    to_unconstrained,
)
from .surrogates import GPMeanPredictor, GPMeanWrapper, KNNRegressor, LinearRegressor

__version__ = "0.1.0"
