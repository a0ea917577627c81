"""Uniform fit-function interface over the estimators.

Gives the bootstrap, the simulation harness and the CLI one calling
convention: ``fit(data, seed) -> report`` plus helpers extracting the
unit coefficient vector and, when available, the estimated difference
CDF.  Censored variants are dispatched automatically when the dataset
carries censoring indicators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import fit_cox, fit_pdr4
from .censored import fit_prl_censored, fit_score_censored
from .dataset import Dataset
from .isotonic import StepCdf
from .prl import fit_prl
from .score import find_zero_crossing

__all__ = ["ESTIMATORS", "EstimatorOutput", "fit_named", "make_estimator"]

ESTIMATORS = ("prl", "score", "pdr4", "cox")

_CONFIG_KEYS = {
    "prl": {"n_starts", "nm_tol", "nm_max_iter", "tie_mode"},
    "score": {"n_starts", "grid_points", "nm_tol", "nm_max_iter", "bisect_tol"},
    "pdr4": {"n_starts", "nm_tol", "nm_max_iter", "n_cap"},
    "cox": {"tol", "max_iter"},
}


@dataclass
class EstimatorOutput:
    name: str
    beta: np.ndarray
    f: StepCdf | None
    objective: float | None
    flags: list[str]
    report: object


def _filter(name: str, config: dict) -> dict:
    return {k: v for k, v in config.items() if k in _CONFIG_KEYS[name]}


def fit_named(name: str, data: Dataset, seed: int = 0,
              **config) -> EstimatorOutput:
    cfg = _filter(name, config)
    if name == "prl":
        if data.censored:
            cfg.pop("tie_mode", None)
            rep = fit_prl_censored(data, seed=seed, **cfg)
        else:
            rep = fit_prl(data, seed=seed, **cfg)
        return EstimatorOutput(name, rep.beta_hat.beta, rep.f_hat,
                               rep.loglik, list(rep.flags), rep)
    if name == "score":
        if data.censored:
            rep = fit_score_censored(data, seed=seed, **cfg)
        else:
            rep = find_zero_crossing(data, seed=seed, **cfg)
        return EstimatorOutput(name, rep.beta_tilde.beta, rep.f_tilde,
                               None, list(rep.flags), rep)
    if name == "pdr4":
        if data.censored:
            raise ValueError("pdr4 does not support censored responses")
        rep = fit_pdr4(data, seed=seed, **cfg)
        return EstimatorOutput(name, rep.beta_hat.beta, rep.f_hat,
                               rep.loglik, list(rep.flags), rep)
    if name == "cox":
        rep = fit_cox(data, **cfg)
        return EstimatorOutput(name, rep.beta_hat.beta, None, rep.loglik,
                               [], rep)
    raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")


def make_estimator(name: str, **config):
    """Bind a name and config into a ``(data, seed) -> beta`` callable."""
    if name not in ESTIMATORS:
        raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")

    def fit(data: Dataset, seed: int = 0) -> np.ndarray:
        return fit_named(name, data, seed=seed, **config).beta

    fit.__name__ = f"fit_{name}"
    return fit
