"""Reference estimators: the quadruple-rank criterion and Cox regression.

Both serve as head-to-head baselines for the pairwise-rank estimators.
The quadruple criterion counts concordance between the ordering of two
projected pair differences and the ordering of the matching response
comparisons, over all index quadruples with four distinct entries; ties
between projections count as zero.  Cox regression maximizes the partial
likelihood by Newton-Raphson with Breslow's convention for tied times,
and is reported in the transformation-model orientation H(Y) = -X'b + e,
i.e. with the sign of the partial-likelihood coefficients flipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._engine import PairEngine
from .dataset import Dataset
from .errors import NonConvergenceError, SampleCapError, SingularHessianError
from .prl import FitReport, multistart_nelder_mead
from .sphere import UnitBeta, angles_to_beta, to_angles

__all__ = ["s4", "fit_pdr4", "fit_cox", "CoxFit"]


@dataclass
class CoxFit:
    beta_hat_unnormalized: np.ndarray
    beta_hat: UnitBeta
    loglik: float
    iterations: int
    ll_trace: np.ndarray | None = None


def _quadruple_sum(v: np.ndarray, b: np.ndarray) -> float:
    """Sum of I(v_ij > v_kl)(b_ij - b_kl) over quadruples of distinct indices.

    Computed as the unrestricted sum over ordered pairs of ordered pairs
    minus the index-collision patterns (inclusion-exclusion); every count
    uses strict comparisons, so tied projections contribute zero exactly.
    """
    n = v.shape[0]
    off = ~np.eye(n, dtype=bool)
    vf = v[off]
    bf = b[off]

    # unrestricted term: sort once, prefix sums of the indicators
    order = np.argsort(vf, kind="stable")
    vs = vf[order]
    bs = bf[order]
    csum = np.concatenate(([0.0], np.cumsum(bs)))
    less = np.searchsorted(vs, vf, side="left")
    total = float(np.sum(bf * less) - np.sum(csum[less]))

    # collision patterns sharing one index between the two pairs: per-row
    # rank counts, batched by sorting each diagonal-free row once and
    # searching all rows jointly in an offset-flattened array
    m = n - 1
    rows = v[off].reshape(n, m)
    browm = b[off].reshape(n, m)
    bcolm = b.T[off.T].reshape(n, m)
    rows_sorted = np.sort(rows, axis=1)
    span = 4.0 * (np.abs(v).max() + 1.0)
    offs = span * np.arange(n)[:, None]
    haystack = (rows_sorted + offs).ravel()
    base = m * np.arange(n)[:, None]

    def counts(needles, side):
        pos = np.searchsorted(haystack, (needles + offs).ravel(), side=side)
        return pos.reshape(n, m) - base

    less_r = counts(rows, "left")
    greater_r = m - counts(rows, "right")
    u2 = m - counts(-rows, "right")
    u3 = counts(-rows, "left")
    corr = float(np.sum(browm * (less_r - greater_r)))      # i = k
    corr += float(np.sum((browm - bcolm) * u2))             # i = l
    corr += float(np.sum((bcolm - browm) * u3))             # j = k
    corr -= float(np.sum(bcolm * (less_r - greater_r)))     # j = l
    # pairs of pairs that are exact reverses of each other ((k,l) = (j,i))
    # are double-counted by the i=l and j=k patterns above
    corr -= float(np.sum((v > 0) * (b - b.T)))
    return total - corr


def s4(data: Dataset, beta: UnitBeta | np.ndarray, n_cap: int = 150) -> float:
    """Quadruple-rank criterion at ``beta``; O(n^2 log n) exact evaluation."""
    if data.n > n_cap:
        raise SampleCapError(
            f"quadruple criterion is O(n^4)-sized (n={data.n} > cap {n_cap}); "
            "raise n_cap explicitly to force the evaluation"
        )
    bvec = beta.beta if isinstance(beta, UnitBeta) else np.asarray(beta, float)
    proj = data.x @ bvec
    v = proj[:, None] - proj[None, :]
    b = (data.y[:, None] > data.y[None, :]).astype(float)
    return _quadruple_sum(v, b)


def fit_pdr4(data: Dataset, n_starts: int = 25, seed: int = 0,
             nm_tol: float = 1e-8, nm_max_iter: int = 2000,
             n_cap: int = 150) -> FitReport:
    """Maximize the quadruple-rank criterion over the unit sphere.

    Same multi-start machinery as the likelihood fit.  The report's
    ``loglik`` carries the maximized criterion value and ``f_hat`` the
    profile step CDF evaluated at the winning direction (diagnostic only;
    the criterion itself involves no CDF).
    """
    if data.n > n_cap:
        raise SampleCapError(
            f"quadruple criterion is O(n^4)-sized (n={data.n} > cap {n_cap})"
        )
    proj_x = data.x
    y = data.y
    b_ind = (y[:, None] > y[None, :]).astype(float)

    def objective(theta):
        bvec = angles_to_beta(theta)
        proj = proj_x @ bvec
        v = proj[:, None] - proj[None, :]
        return _quadruple_sum(v, b_ind)

    if data.p == 1:
        vals = np.array([s4(data, np.array([1.0]), n_cap),
                         s4(data, np.array([-1.0]), n_cap)])
        best = int(np.argmax(vals))
        bvec = np.array([1.0]) if best == 0 else np.array([-1.0])
        detail = PairEngine.uncensored(data, "strict").detail(bvec)
        return FitReport(UnitBeta(bvec), None, detail.cdf, vals[best], 2,
                         vals, np.array([True, True]))

    theta_best, values, converged = multistart_nelder_mead(
        objective, data.p, n_starts, seed, nm_tol, nm_max_iter,
    )
    bvec = angles_to_beta(theta_best)
    bvec = bvec / np.linalg.norm(bvec)
    beta_hat = UnitBeta(bvec)
    detail = PairEngine.uncensored(data, "strict").detail(bvec)
    report = FitReport(
        beta_hat=beta_hat,
        theta_hat=to_angles(beta_hat),
        f_hat=detail.cdf,
        loglik=float(np.max(values)),
        n_starts=n_starts,
        start_values=values,
        converged=converged,
    )
    if not converged.all():
        report.flags.append("nonconverged_starts")
    return report


def _cox_quantities(xs, events, group_start, b, want_derivs=True):
    """Breslow partial likelihood pieces on y-sorted data.

    ``group_start[i]`` is the first sorted position of the tie group of
    position i, so the risk set of an event at i is positions
    group_start[i]..n-1.
    """
    n, p = xs.shape
    eta = xs @ b
    c = eta.max()
    w = np.exp(eta - c)
    rc_w = np.cumsum(w[::-1])[::-1]
    s0 = rc_w[group_start]
    ll = float(np.sum(events * (eta - (np.log(s0) + c))))
    if not want_derivs:
        return ll, None, None
    wx = w[:, None] * xs
    rc_wx = np.cumsum(wx[::-1], axis=0)[::-1]
    s1 = rc_wx[group_start]
    mu = s1 / s0[:, None]
    wxx = wx[:, :, None] * xs[:, None, :]
    rc_wxx = np.cumsum(wxx[::-1], axis=0)[::-1]
    s2 = rc_wxx[group_start]
    grad = (events[:, None] * (xs - mu)).sum(axis=0)
    cov = s2 / s0[:, None, None] - mu[:, :, None] * mu[:, None, :]
    hess = -(events[:, None, None] * cov).sum(axis=0)
    return ll, grad, hess


def fit_cox(data: Dataset, tol: float = 1e-10, max_iter: int = 100) -> CoxFit:
    """Newton-Raphson Cox partial-likelihood fit (Breslow ties).

    Convergence: gradient norm below ``tol``.  Steps are halved until the
    partial log-likelihood does not decrease (up to float resolution), so
    the iteration trace is monotone to within one ulp.  The normalized
    ``beta_hat`` is sign-flipped into the transformation-model
    orientation H(Y) = -X'b + e.
    """
    events = data.delta if data.censored else np.ones(data.n)
    order = np.lexsort((np.arange(data.n), data.y))
    ys = data.y[order]
    xs = data.x[order]
    ev = events[order]
    firsts = np.flatnonzero(np.concatenate(([True], ys[1:] != ys[:-1])))
    group_id = np.cumsum(np.concatenate(([0], (ys[1:] != ys[:-1]).astype(int))))
    group_start = firsts[group_id]

    p = data.p
    b = np.zeros(p)
    ll, grad, hess = _cox_quantities(xs, ev, group_start, b)
    trace = [ll]
    it = 0
    while it < max_iter:
        if np.linalg.norm(grad) < tol:
            break
        try:
            direction = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularHessianError(str(exc)) from exc
        if not np.all(np.isfinite(direction)):
            raise SingularHessianError("non-finite Newton direction")
        # monotone ascent up to float resolution: near the optimum the
        # true improvement falls below one ulp of ll while the gradient
        # still carries information, so sub-resolution wiggle is accepted
        slack = 4.0 * np.finfo(float).eps * max(1.0, abs(ll))
        step = 1.0
        for _ in range(60):
            ll_new = _cox_quantities(xs, ev, group_start, b + step * direction,
                                     want_derivs=False)[0]
            if ll_new >= ll - slack and np.isfinite(ll_new):
                break
            step *= 0.5
        else:
            raise NonConvergenceError(
                "no non-decreasing step found; partial likelihood may be "
                "unbounded"
            )
        b = b + step * direction
        ll, grad, hess = _cox_quantities(xs, ev, group_start, b)
        trace.append(ll)
        it += 1
    else:
        raise NonConvergenceError(
            f"gradient norm {np.linalg.norm(grad):.2e} after {max_iter} iterations"
        )

    nrm = np.linalg.norm(b)
    if nrm == 0.0:
        raise SingularHessianError("degenerate fit: zero coefficient vector")
    return CoxFit(
        beta_hat_unnormalized=b,
        beta_hat=UnitBeta(-b / nrm),
        loglik=ll,
        iterations=it,
        ll_trace=np.array(trace),
    )
