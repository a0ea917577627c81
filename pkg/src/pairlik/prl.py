"""Maximum pairwise-rank-likelihood estimation of the direction vector.

The log-likelihood sums, over ordered pairs, Bernoulli terms for the
comparison events I(Y_i > Y_j) with success probability F((X_i - X_j)'b).
Profiling out the monotone nuisance F via isotonic regression leaves a
criterion of the direction alone, maximized over the unit sphere through
the polar chart with multi-start Nelder-Mead.

``tie_mode`` selects the indicator convention: "strict" uses I(Y_i > Y_j)
as written above; "tie_aware" uses I(Y_i >= Y_j), which makes tied
responses contribute log F(v_ij) + log F(v_ji) instead of penalizing both
orientations.  The two coincide whenever Y has no ties.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._engine import PairEngine
from .dataset import Dataset
from .isotonic import StepCdf
from .pairs import ordered_pair_indices
from .sphere import PolarAngles, UnitBeta, angles_to_beta, to_angles

__all__ = ["FitReport", "loglik", "profile_loglik", "fit_prl"]

CLAMP_EPS = 1e-10


@dataclass
class FitReport:
    beta_hat: UnitBeta
    theta_hat: PolarAngles | None
    f_hat: StepCdf
    loglik: float
    n_starts: int
    start_values: np.ndarray
    converged: np.ndarray
    flags: list[str] = field(default_factory=list)


def _pair_indicators(data: Dataset, tie_mode: str):
    i_idx, j_idx = ordered_pair_indices(data.n)
    yi, yj = data.y[i_idx], data.y[j_idx]
    if tie_mode == "strict":
        ind = (yi > yj).astype(float)
    elif tie_mode == "tie_aware":
        ind = (yi >= yj).astype(float)
    else:
        raise ValueError(f"unknown tie_mode {tie_mode!r}")
    return i_idx, j_idx, ind


def loglik(data: Dataset, beta: UnitBeta | np.ndarray, f: StepCdf,
           tie_mode: str = "strict") -> float:
    """Pairwise rank log-likelihood of ``beta`` with a given step CDF.

    Probabilities strictly inside (0, 1) are clamped away from the
    boundary; an exact 0 (or 1) multiplying a nonzero indicator weight
    yields -inf, while 0 * log 0 := 0 keeps perfect fits at exactly 0.
    """
    b = beta.beta if isinstance(beta, UnitBeta) else np.asarray(beta, dtype=float)
    i_idx, j_idx, ind = _pair_indicators(data, tie_mode)
    proj = data.x @ b
    v = proj[i_idx] - proj[j_idx]
    q = f(v)
    if np.any(((q == 0.0) & (ind > 0.0)) | ((q == 1.0) & (ind < 1.0))):
        return float("-inf")
    interior = (q > 0.0) & (q < 1.0)
    qc = np.clip(q[interior], CLAMP_EPS, 1.0 - CLAMP_EPS)
    terms = ind[interior] * np.log(qc) + (1.0 - ind[interior]) * np.log1p(-qc)
    return float(terms.sum())


def profile_loglik(data: Dataset, beta: UnitBeta | np.ndarray,
                   tie_mode: str = "strict") -> tuple[float, StepCdf]:
    """Profile log-likelihood and its maximizing step CDF at ``beta``."""
    b = beta.beta if isinstance(beta, UnitBeta) else np.asarray(beta, dtype=float)
    detail = PairEngine.uncensored(data, tie_mode).detail(b)
    return detail.pl, detail.cdf


def multistart_nelder_mead(objective, p: int, n_starts: int, seed: int,
                           tol: float, max_iter: int):
    """Maximize ``objective(theta)`` from seeded uniform starts.

    Returns (theta_best, values, converged_flags); the winner is the start
    with the largest final value, ties broken by start index.
    """
    rng = np.random.default_rng(seed)
    starts = rng.uniform(-np.pi, np.pi, size=(n_starts, p - 1))
    values = np.empty(n_starts)
    converged = np.zeros(n_starts, dtype=bool)
    thetas = np.empty_like(starts)
    for s in range(n_starts):
        res = minimize(
            lambda th: -objective(th),
            starts[s],
            method="Nelder-Mead",
            options={
                "xatol": tol,
                "fatol": tol,
                "maxiter": max_iter,
                "maxfev": 4 * max_iter,
            },
        )
        values[s] = -res.fun
        converged[s] = bool(res.success)
        thetas[s] = res.x
    best = int(np.argmax(values))
    return thetas[best], values, converged


def fit_prl(data: Dataset, n_starts: int = 25, seed: int = 0,
            nm_tol: float = 1e-8, nm_max_iter: int = 2000,
            tie_mode: str = "strict") -> FitReport:
    """Maximum pairwise-rank-likelihood fit of the unit direction."""
    engine = PairEngine.uncensored(data, tie_mode)
    return _fit_prl_engine(engine, data.p, n_starts, seed, nm_tol, nm_max_iter)


def _fit_prl_engine(engine: PairEngine, p: int, n_starts: int, seed: int,
                    nm_tol: float, nm_max_iter: float) -> FitReport:
    if p == 1:
        cands = np.array([[1.0], [-1.0]])
        vals = engine.pl_batch(cands.T)
        best = int(np.argmax(vals))
        detail = engine.detail(cands[best])
        return FitReport(
            beta_hat=UnitBeta(cands[best]),
            theta_hat=None,
            f_hat=detail.cdf,
            loglik=detail.pl,
            n_starts=2,
            start_values=vals,
            converged=np.array([True, True]),
            flags=_fit_flags(detail.pl),
        )

    theta_best, values, converged = multistart_nelder_mead(
        lambda th: engine.pl_value(angles_to_beta(th)),
        p, n_starts, seed, nm_tol, nm_max_iter,
    )
    b = angles_to_beta(theta_best)
    b = b / np.linalg.norm(b)
    detail = engine.detail(b)
    beta_hat = UnitBeta(b)
    report = FitReport(
        beta_hat=beta_hat,
        theta_hat=to_angles(beta_hat),
        f_hat=detail.cdf,
        loglik=detail.pl,
        n_starts=n_starts,
        start_values=values,
        converged=converged,
        flags=_fit_flags(detail.pl),
    )
    if not converged.all():
        report.flags.append("nonconverged_starts")
    return report


def _fit_flags(pl: float) -> list[str]:
    return ["perfect_separation"] if pl == 0.0 else []
