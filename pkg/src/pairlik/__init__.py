"""Semiparametric linear transformation model H(Y) = X'b + e:
pairwise-rank-likelihood and score-based estimation of the unit-norm
coefficient vector and of the error-difference CDF, with baselines,
bootstrap inference, a right-censoring extension, and a Monte Carlo
harness."""

__version__ = "0.1.0"

from .baselines import CoxFit, fit_cox, fit_pdr4, s4
from .bootstrap import BootstrapSummary, bootstrap
from .censored import (SurvivalStep, censored_loglik, fit_prl_censored,
                       fit_score_censored, km_censoring)
from .dataset import DataError, Dataset, read_csv_dataset
from .errors import (FitFailure, NonConvergenceError, SampleCapError,
                     SingularHessianError)
from .estimators import ESTIMATORS, fit_named, make_estimator
from .isotonic import IsotonicFit, StepCdf, maxmin_oracle, pava, profile_cdf
from .pairs import PairSystem, build_pairs
from .prl import FitReport, fit_prl, loglik, profile_loglik
from .score import (ScoreValue, ZeroCrossReport, f_tilde, find_zero_crossing,
                    psi_n)
from .simlab import (SimDesign, SimReport, estimand_f0, generate, ise,
                     run_study, true_f0)
from .sphere import PolarAngles, UnitBeta, to_angles, to_beta

__all__ = [
    "__version__",
    "BootstrapSummary", "CoxFit", "DataError", "Dataset", "ESTIMATORS",
    "FitFailure", "FitReport", "IsotonicFit", "NonConvergenceError",
    "PairSystem", "PolarAngles", "SampleCapError", "ScoreValue", "SimDesign",
    "SimReport", "SingularHessianError", "StepCdf", "SurvivalStep",
    "UnitBeta", "ZeroCrossReport", "bootstrap", "build_pairs",
    "censored_loglik", "estimand_f0", "f_tilde", "find_zero_crossing", "fit_cox",
    "fit_named", "fit_pdr4", "fit_prl", "fit_prl_censored",
    "fit_score_censored", "generate", "ise", "km_censoring", "loglik",
    "make_estimator", "maxmin_oracle", "pava", "profile_cdf",
    "profile_loglik", "psi_n", "run_study", "s4", "to_angles", "to_beta",
    "true_f0",
]
