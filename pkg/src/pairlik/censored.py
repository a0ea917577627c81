"""Right-censored extension via inverse-probability-of-censoring weights.

With T possibly cut off at an independent censoring time, the comparison
indicator I(T_i > T_j) is replaced by its observable unbiased surrogate
Delta_j I(Y_i > Y_j) / G(Y_j)^2, where G is the censoring survival
function, estimated by the Kaplan-Meier product-limit estimator applied
to the censoring events.  The weighted pairwise likelihood, its isotonic
profile, and the weighted score then reuse the uncensored machinery; with
no censoring everything reduces exactly to the uncensored pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._engine import PairEngine
from .dataset import Dataset
from .isotonic import StepCdf
from .prl import CLAMP_EPS, FitReport, _fit_prl_engine
from .score import ZeroCrossReport, zero_crossing_from_engine

__all__ = [
    "SurvivalStep",
    "km_censoring",
    "pair_ipw_weights",
    "censored_loglik",
    "fit_prl_censored",
    "fit_score_censored",
]

G_FLOOR = 1e-6
LOW_EVENT_FRACTION = 0.2


@dataclass(frozen=True)
class SurvivalStep:
    """Right-continuous survival step function, 1 before the first time."""

    times: np.ndarray
    surv: np.ndarray
    floor_eps: float = G_FLOOR

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        surv = np.asarray(self.surv, dtype=float).ravel()
        if times.size != surv.size:
            raise ValueError("times and surv must have equal length")
        if times.size:
            if np.any(np.diff(times) <= 0):
                raise ValueError("times must be strictly increasing")
            if np.any(np.diff(surv) > 1e-12) or surv[0] > 1.0 + 1e-12 \
                    or np.any(surv < -1e-12):
                raise ValueError("surv must be nonincreasing within [0, 1]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "surv", np.clip(surv, 0.0, 1.0))

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.times.size == 0:
            return np.ones_like(y)
        idx = np.searchsorted(self.times, y, side="right")
        vals = np.concatenate(([1.0], self.surv))
        return vals[idx]


def km_censoring(data: Dataset) -> SurvivalStep:
    """Product-limit estimate of the censoring survival G(y) = P(C > y).

    The censoring process's events are the observations with delta = 0.
    At tied times the survival events are ordered first, so they are out
    of the censoring risk set at their own time.
    """
    if data.delta is None:
        raise ValueError("censoring estimation needs delta indicators")
    y = data.y
    order = np.argsort(y, kind="stable")
    ys = y[order]
    cens = 1.0 - data.delta[order]
    uniq, first = np.unique(ys, return_index=True)
    d_cens = np.add.reduceat(cens, first)
    d_event = np.add.reduceat(data.delta[order], first)
    n_risk = data.n - first
    at_risk_for_cens = n_risk - d_event
    with np.errstate(divide="ignore", invalid="ignore"):
        factors = np.where(d_cens > 0, 1.0 - d_cens / at_risk_for_cens, 1.0)
    surv = np.cumprod(factors)
    keep = d_cens > 0
    return SurvivalStep(uniq[keep], surv[keep])


def pair_ipw_weights(data: Dataset, g, i_idx: np.ndarray, j_idx: np.ndarray):
    """Per ordered pair (i, j): the weights of the ">" and "<=" terms."""
    g_obs = np.maximum(np.asarray(g(data.y), dtype=float), G_FLOOR)
    inv2 = 1.0 / g_obs ** 2
    yi, yj = data.y[i_idx], data.y[j_idx]
    w_gt = data.delta[j_idx] * (yi > yj) * inv2[j_idx]
    w_le = data.delta[i_idx] * (yi <= yj) * inv2[i_idx]
    return w_gt, w_le


def censored_loglik(data: Dataset, beta, f: StepCdf, g) -> float:
    """Weighted pairwise log-likelihood over unordered pairs i < j."""
    if data.delta is None:
        raise ValueError("censored likelihood needs delta indicators")
    from .sphere import UnitBeta

    b = beta.beta if isinstance(beta, UnitBeta) else np.asarray(beta, float)
    iu, ju = np.triu_indices(data.n, k=1)
    w_gt, w_le = pair_ipw_weights(data, g, iu, ju)
    proj = data.x @ b
    v = proj[iu] - proj[ju]
    q = f(v)
    if np.any(((q == 0.0) & (w_gt > 0.0)) | ((q == 1.0) & (w_le > 0.0))):
        return float("-inf")
    interior = (q > 0.0) & (q < 1.0)
    qc = np.clip(q[interior], CLAMP_EPS, 1.0 - CLAMP_EPS)
    terms = w_gt[interior] * np.log(qc) + w_le[interior] * np.log1p(-qc)
    return float(terms.sum())


def weighted_engine(data: Dataset, g=None) -> PairEngine:
    """Ordered-pair engine with IPW weights (the fitting representation).

    Each ordered pair carries total weight w_> + w_<= and response
    w_> / (w_> + w_<=); with no censoring this is exactly the uncensored
    0/1 system, so the censored pipeline reduces bit-for-bit.
    """
    if data.delta is None:
        raise ValueError("the censored pipeline needs delta indicators")
    if g is None:
        g = km_censoring(data)
    iu, ju = np.triu_indices(data.n, k=1)
    wg_f, wl_f = pair_ipw_weights(data, g, iu, ju)
    wg_b, wl_b = pair_ipw_weights(data, g, ju, iu)
    w_fwd = wg_f + wl_f
    w_bwd = wg_b + wl_b
    with np.errstate(invalid="ignore", divide="ignore"):
        r_fwd = np.where(w_fwd > 0, wg_f / w_fwd, 0.0)
        r_bwd = np.where(w_bwd > 0, wg_b / w_bwd, 0.0)
    return PairEngine.weighted(data, r_fwd, r_bwd, w_fwd, w_bwd)


def _censoring_flags(data: Dataset) -> list[str]:
    if float(np.mean(data.delta)) <= LOW_EVENT_FRACTION:
        return ["low_effective_sample"]
    return []


def fit_prl_censored(data: Dataset, n_starts: int = 25, seed: int = 0,
                     nm_tol: float = 1e-8, nm_max_iter: int = 2000,
                     g=None) -> FitReport:
    """Weighted pairwise-rank-likelihood fit under right censoring."""
    engine = weighted_engine(data, g)
    report = _fit_prl_engine(engine, data.p, n_starts, seed, nm_tol,
                             nm_max_iter)
    report.flags.extend(_censoring_flags(data))
    return report


def fit_score_censored(data: Dataset, n_starts: int = 25, seed: int = 0,
                       grid_points: int = 4096, nm_tol: float = 1e-8,
                       nm_max_iter: int = 2000, bisect_tol: float = 1e-8,
                       g=None) -> ZeroCrossReport:
    """Weighted zero-crossing score fit under right censoring."""
    if data.p < 2:
        raise ValueError("the zero-crossing search needs p >= 2")
    engine = weighted_engine(data, g)
    report = zero_crossing_from_engine(
        engine, data.p, n_starts, seed, grid_points, nm_tol, nm_max_iter,
        bisect_tol,
    )
    report.flags.extend(_censoring_flags(data))
    return report
