"""Score-function estimation: zero-crossings of the pairwise score.

The score pairs covariate differences with profile residuals,

    psi(b) = n^-2 sum_{i != j} (X_i - X_j) {I(Y_i > Y_j) - Fhat_b(v_ij)},

and the estimator is a zero-crossing of psi: a point whose every
neighborhood contains arguments where each component takes both signs
(psi is piecewise constant in b, so exact roots rarely exist).

On the polar chart the score has p components but only p-1 free angles,
so the search drops one component at a time: for each k the reduced map
S^(-k) has matching dimensions and its zero-crossing theta^(-k) is found
by a grid-plus-bisection scan (p = 2) or by norm minimization (p > 2).
The per-k solutions are aligned (sign and branch) and averaged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._engine import PairEngine
from .dataset import Dataset
from .isotonic import StepCdf
from .sphere import PolarAngles, UnitBeta, angles_to_beta, to_angles

__all__ = ["ScoreValue", "ZeroCrossReport", "psi_n", "find_zero_crossing", "f_tilde"]


@dataclass(frozen=True)
class ScoreValue:
    psi: np.ndarray


@dataclass
class PerComponentCrossing:
    k: int
    theta: np.ndarray
    residual_norm: float
    pl_value: float


@dataclass
class ZeroCrossReport:
    beta_tilde: UnitBeta
    theta_tilde: PolarAngles
    per_k: list[PerComponentCrossing]
    f_tilde: StepCdf
    flags: list[str] = field(default_factory=list)


def psi_n(data: Dataset, beta: UnitBeta | np.ndarray) -> ScoreValue:
    """Score vector at ``beta`` (profile CDF recomputed at that direction)."""
    b = beta.beta if isinstance(beta, UnitBeta) else np.asarray(beta, dtype=float)
    return ScoreValue(PairEngine.uncensored(data, "strict").psi_value(b))


def f_tilde(data: Dataset, beta_tilde: UnitBeta | np.ndarray) -> StepCdf:
    """Profile step CDF evaluated at the score estimate."""
    b = beta_tilde.beta if isinstance(beta_tilde, UnitBeta) \
        else np.asarray(beta_tilde, dtype=float)
    return PairEngine.uncensored(data, "strict").detail(b).cdf


def find_zero_crossing(data: Dataset, n_starts: int = 25, seed: int = 0,
                       grid_points: int = 4096, nm_tol: float = 1e-8,
                       nm_max_iter: int = 2000,
                       bisect_tol: float = 1e-8) -> ZeroCrossReport:
    """Locate the zero-crossing estimate on the unit sphere."""
    if data.p < 2:
        raise ValueError("the zero-crossing search needs p >= 2")
    engine = PairEngine.uncensored(data, "strict")
    return zero_crossing_from_engine(
        engine, data.p, n_starts, seed, grid_points, nm_tol, nm_max_iter,
        bisect_tol,
    )


def _wrap_angle(x):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - x, 2.0 * np.pi)


def select_crossing_1d(grid, svals, comp_eval, pl_eval, pl_grid_eval,
                       bisect_tol, k, flags):
    """One reduced-score component: bracket, bisect, keep the pl-best.

    ``svals`` holds the component on ``grid``; ``comp_eval(theta)`` and
    ``pl_eval(theta)`` evaluate the component and the profile likelihood
    at a single angle; ``pl_grid_eval()`` lazily yields the profile
    likelihood on the whole grid for the degenerate case.
    """
    zero_frac = float(np.mean(svals == 0.0))
    if zero_frac > 0.25:
        # the component vanishes identically on a sizable arc (tiny n or
        # collinear data): every such angle is a crossing, so return the
        # best-likelihood grid point among them
        pl_grid = pl_grid_eval()
        zero_pos = np.flatnonzero(svals == 0.0)
        g = int(zero_pos[np.argmax(pl_grid[zero_pos])])
        if "degenerate" not in flags:
            flags.append("degenerate")
        return PerComponentCrossing(k, np.array([grid[g]]), 0.0,
                                    float(pl_grid[g]))
    sign = np.sign(svals)
    bracket = sign[:-1] * sign[1:] <= 0.0
    candidates = []
    for g in np.flatnonzero(bracket):
        lo, hi = grid[g], grid[g + 1]
        s_lo = svals[g]
        while hi - lo > bisect_tol:
            mid = 0.5 * (lo + hi)
            s_mid = comp_eval(mid)
            if np.sign(s_lo) * np.sign(s_mid) <= 0.0:
                hi = mid
            else:
                lo, s_lo = mid, s_mid
        theta_star = 0.5 * (lo + hi)
        candidates.append(
            (pl_eval(theta_star), theta_star, abs(comp_eval(theta_star)))
        )
    if not candidates:
        g = int(np.argmin(np.abs(svals)))
        theta_star = float(grid[g])
        flags.append(f"no_crossing_k{k}")
        return PerComponentCrossing(k, np.array([theta_star]),
                                    abs(float(svals[g])), pl_eval(theta_star))
    plv, theta_star, resid = max(candidates, key=lambda c: c[0])
    return PerComponentCrossing(k, np.array([theta_star]), resid, plv)


def combine_crossings(per_k: list[PerComponentCrossing]) -> np.ndarray:
    """Align per-component solutions and average the angles.

    The chart is not injective (the same direction has several angle
    representations), so every candidate is sign-aligned to the
    best-likelihood candidate in coefficient space, re-expressed through
    the canonical inverse chart, and branch-wrapped to within pi of the
    anchor before componentwise averaging.
    """
    anchor = max(per_k, key=lambda c: (c.pl_value, -c.k))
    beta_anchor = angles_to_beta(anchor.theta)
    beta_anchor = beta_anchor / np.linalg.norm(beta_anchor)
    theta_anchor = to_angles(beta_anchor).theta
    aligned = []
    for cand in per_k:
        b = angles_to_beta(cand.theta)
        b = b / np.linalg.norm(b)
        if float(b @ beta_anchor) < 0.0:
            b = -b
        th = to_angles(b).theta
        aligned.append(theta_anchor + _wrap_angle(th - theta_anchor))
    return np.mean(aligned, axis=0)


def zero_crossing_from_engine(engine: PairEngine, p: int, n_starts: int,
                              seed: int, grid_points: int, nm_tol: float,
                              nm_max_iter: int,
                              bisect_tol: float) -> ZeroCrossReport:
    flags: list[str] = []
    if p == 2:
        grid = np.linspace(-np.pi, np.pi, grid_points)
        psi_grid = engine.psi_batch(angles_to_beta(grid[None, :]))
        pl_grid_cache: list[np.ndarray] = []

        def pl_grid_eval():
            if not pl_grid_cache:
                pl_grid_cache.append(
                    engine.pl_batch(angles_to_beta(grid[None, :]))
                )
            return pl_grid_cache[0]

        per_k = []
        for k in (1, 2):
            comp = 2 - k  # dropping the k-th component keeps the other
            per_k.append(select_crossing_1d(
                grid, psi_grid[comp],
                lambda th, c=comp: float(
                    engine.psi_value(angles_to_beta(np.array([th])))[c]
                ),
                lambda th: engine.pl_value(angles_to_beta(np.array([th]))),
                pl_grid_eval, bisect_tol, k, flags,
            ))
    else:
        per_k = _per_k_highdim(engine, p, n_starts, seed, nm_tol,
                               nm_max_iter, flags)

    theta_mean = combine_crossings(per_k)
    b = angles_to_beta(theta_mean)
    b = b / np.linalg.norm(b)
    beta_tilde = UnitBeta(b)
    detail = engine.detail(b)
    return ZeroCrossReport(
        beta_tilde=beta_tilde,
        theta_tilde=to_angles(beta_tilde),
        per_k=per_k,
        f_tilde=detail.cdf,
        flags=flags,
    )


def _per_k_highdim(engine, p, n_starts, seed, nm_tol, nm_max_iter, flags):
    # near-zero residual threshold, scaled to the magnitude of the score's
    # covariate-difference terms
    scale = (2.0 / engine.n ** 2) * float(
        np.linalg.norm(engine.dhalf, axis=1).sum()
    )
    threshold = 1e-3 * scale
    per_k = []
    for k in range(1, p + 1):
        keep = [c for c in range(p) if c != k - 1]

        def resid_norm(th):
            psi = engine.psi_value(angles_to_beta(th))
            return float(np.linalg.norm(psi[keep]))

        rng = np.random.default_rng([seed, k])
        starts = rng.uniform(-np.pi, np.pi, size=(n_starts, p - 1))
        candidates = []
        for s in range(n_starts):
            res = minimize(resid_norm, starts[s], method="Nelder-Mead",
                           options={"xatol": nm_tol, "fatol": nm_tol,
                                    "maxiter": nm_max_iter,
                                    "maxfev": 4 * nm_max_iter})
            candidates.append((float(res.fun), res.x,
                               engine.pl_value(angles_to_beta(res.x))))
        near_zero = [c for c in candidates if c[0] <= threshold]
        if near_zero:
            resid, th, plv = max(near_zero, key=lambda c: c[2])
        else:
            resid, th, plv = min(candidates, key=lambda c: c[0])
            flags.append(f"no_crossing_k{k}")
        per_k.append(PerComponentCrossing(k, th, resid, plv))
    return per_k
