"""Nonparametric bootstrap standard errors and percentile intervals.

Rows are resampled with replacement, the estimator is refit on each
resample, and the componentwise standard deviation and empirical
quantiles of the refits give the standard errors and the percentile
confidence interval.  The quantile convention is the ceil(q*B)-th order
statistic, which for B = 200 and alpha = 0.05 picks the 5th and 195th
smallest values exactly.

Refitting the p = 2 score estimator B times is by far the dominant cost
of coverage studies, so that case takes a specialized path: a resample's
pair system equals the original pair system with multiplicity weights
c_i c_j (plus tied self-pairs pooled at projection zero), which lets the
per-angle sort of the grid scan be shared across all B replicates.  The
specialized path reproduces the generic refit up to floating-point
summation order and uses the identical resampling streams.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import FitFailure
from .isotonic import merge_duplicate_knots, pava_fitted
from .score import combine_crossings, select_crossing_1d
from .sphere import angles_to_beta

__all__ = ["BootstrapSummary", "bootstrap"]

_MAX_ATTEMPTS = 5


@dataclass
class BootstrapSummary:
    B: int
    alpha: float
    se: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    replicates: np.ndarray
    n_failed: int


def _resample_indices(seed: int, b: int, attempt: int, n: int) -> np.ndarray:
    return np.random.default_rng([seed, b, attempt]).integers(0, n, size=n)


def _fit_seed(seed: int, b: int, attempt: int) -> int:
    return int(np.random.SeedSequence([seed, b, attempt]).generate_state(1)[0])


def _summarize(replicates: list[np.ndarray], B: int, alpha: float,
               n_failed: int) -> BootstrapSummary:
    reps = np.asarray(replicates, dtype=float)
    if reps.size == 0:
        raise FitFailure("all bootstrap replicates failed")
    bs = reps.shape[0]
    se = reps.std(axis=0, ddof=1) if bs > 1 else np.zeros(reps.shape[1])
    srt = np.sort(reps, axis=0)
    lo_idx = max(int(np.ceil(alpha / 2.0 * bs)), 1) - 1
    hi_idx = int(np.ceil((1.0 - alpha / 2.0) * bs)) - 1
    return BootstrapSummary(
        B=B, alpha=alpha, se=se,
        ci_lower=srt[lo_idx], ci_upper=srt[hi_idx],
        replicates=reps, n_failed=n_failed,
    )


def bootstrap(data: Dataset, estimator, B: int = 200, alpha: float = 0.05,
              seed: int = 0, estimator_config: dict | None = None,
              ) -> BootstrapSummary:
    """Resample, refit, and summarize.

    ``estimator`` is an estimator name ("prl", "score", "pdr4", "cox") or
    a callable ``(data, seed) -> beta`` returning a coefficient vector.
    A replicate whose fit raises is redrawn with a fresh sub-seed; after
    ``_MAX_ATTEMPTS`` consecutive failures it is skipped and counted.
    """
    if B < 2:
        raise ValueError("B must be at least 2")
    cfg = dict(estimator_config or {})
    if estimator == "score" and _fast_score_applicable(data, cfg):
        replicates, n_failed = _fast_score_replicates(data, B, seed, cfg)
        return _summarize(replicates, B, alpha, n_failed)

    if callable(estimator):
        fit_fn = estimator
    else:
        from .estimators import make_estimator

        fit_fn = make_estimator(estimator, **cfg)

    replicates: list[np.ndarray] = []
    n_failed = 0
    for b in range(B):
        for attempt in range(_MAX_ATTEMPTS):
            idx = _resample_indices(seed, b, attempt, data.n)
            sample = Dataset(
                data.x[idx], data.y[idx],
                data.delta[idx] if data.censored else None,
            )
            try:
                beta = np.asarray(
                    fit_fn(sample, _fit_seed(seed, b, attempt)), dtype=float
                )
            except (FitFailure, ValueError, np.linalg.LinAlgError):
                continue
            replicates.append(beta)
            break
        else:
            n_failed += 1
    return _summarize(replicates, B, alpha, n_failed)


# ---------------------------------------------------------------------------
# specialized p = 2 score path


def _fast_score_applicable(data: Dataset, cfg: dict) -> bool:
    if data.p != 2 or data.censored:
        return False
    if cfg.get("tie_mode", "strict") != "strict":
        return False
    return np.unique(data.y).size == data.n


class _ResampledScoreSystem:
    """Weighted-pair view of all B resamples of one dataset.

    The original i < j pairs are fixed; a resample only changes the pair
    multiplicities c_i c_j and adds self-pairs (duplicated rows compared
    with themselves), which all sit at projection zero with indicator 0.
    """

    def __init__(self, data: Dataset, B: int, seed: int):
        n = data.n
        iu, ju = np.triu_indices(n, k=1)
        self.n = n
        self.m = iu.size
        self.dhalf = np.ascontiguousarray(data.x[iu] - data.x[ju])
        ind = (data.y[iu] > data.y[ju]).astype(float)
        # full ordered system: forward (i, j) then backward (j, i)
        self.r_full = np.concatenate([ind, 1.0 - ind])
        self.src = np.concatenate([np.arange(self.m), np.arange(self.m)])
        self.sgn = np.concatenate([np.ones(self.m), -np.ones(self.m)])
        counts = np.empty((B, n))
        for b in range(B):
            idx = _resample_indices(seed, b, 0, n)
            counts[b] = np.bincount(idx, minlength=n)
        self.counts = counts
        self.self_w = (counts * (counts - 1.0)).sum(axis=1)
        # per-pair resample weights, slot m for the pooled self-pairs
        wp = np.empty((B, self.m + 1))
        wp[:, :self.m] = counts[:, iu] * counts[:, ju]
        wp[:, self.m] = self.self_w
        self.wpair_ext = wp

    def psi_grid(self, thetas: np.ndarray) -> np.ndarray:
        """Score components for every replicate on a grid; (G, B, 2)."""
        g_pts = thetas.size
        B = self.counts.shape[0]
        out = np.empty((g_pts, B, 2))
        betas = angles_to_beta(thetas[None, :])
        v_cols = self.dhalf @ betas
        for g in range(g_pts):
            out[g] = self._psi_all_reps(v_cols[:, g])
        return out

    def _sorted_full(self, v_half: np.ndarray):
        v_full = np.concatenate([v_half, -v_half])
        order = np.argsort(v_full)
        vs = v_full[order]
        pos0 = int(np.searchsorted(vs, 0.0, side="left"))
        ext = np.insert(vs, pos0, 0.0)
        has_dup = bool(np.any(ext[1:] == ext[:-1]))
        return order, vs, pos0, has_dup

    def _psi_all_reps(self, v_half: np.ndarray) -> np.ndarray:
        order, vs, pos0, has_dup = self._sorted_full(v_half)
        rs = self.r_full[order]
        B = self.counts.shape[0]
        r_ext = np.insert(rs, pos0, 0.0)
        v_ext = np.insert(vs, pos0, 0.0) if has_dup else None
        sgn_ext = np.insert(self.sgn[order], pos0, 0.0)
        src_ext = np.insert(self.src[order], pos0, self.m)
        w_all = self.wpair_ext[:, src_ext]
        contribs = np.empty((B, self.m))
        for b in range(B):
            w_ext = w_all[b]
            keep = np.flatnonzero(w_ext > 0.0)
            rk = r_ext[keep]
            wk = w_ext[keep]
            if has_dup:
                vk = v_ext[keep]
                _, r_m, w_m, starts = merge_duplicate_knots(vk, rk, wk)
                f_m = pava_fitted(r_m, w_m)
                reps = (np.diff(np.append(starts, vk.size))
                        if starts is not None else None)
                fitted = np.repeat(f_m, reps) if reps is not None else f_m
            else:
                fitted = pava_fitted(rk, wk)
            t = wk * (rk - fitted) * sgn_ext[keep]
            contribs[b] = np.bincount(src_ext[keep], weights=t,
                                      minlength=self.m + 1)[:self.m]
        return (contribs @ self.dhalf) / self.n ** 2

    def _one_rep_eval(self, theta: float, b: int, want_pl: bool):
        beta = angles_to_beta(np.array([theta]))
        order, vs, pos0, has_dup = self._sorted_full(self.dhalf @ beta)
        rs = self.r_full[order]
        r_ext = np.insert(rs, pos0, 0.0)
        v_ext = np.insert(vs, pos0, 0.0)
        sgn_ext = np.insert(self.sgn[order], pos0, 0.0)
        src_ext = np.insert(self.src[order], pos0, self.m)
        w_ext = self.wpair_ext[b, src_ext]
        keep = np.flatnonzero(w_ext > 0.0)
        rk, wk, vk = r_ext[keep], w_ext[keep], v_ext[keep]
        if has_dup:
            _, r_m, w_m, starts = merge_duplicate_knots(vk, rk, wk)
            f_m = pava_fitted(r_m, w_m)
            reps = (np.diff(np.append(starts, vk.size))
                    if starts is not None else None)
            fitted = np.repeat(f_m, reps) if reps is not None else f_m
        else:
            fitted = pava_fitted(rk, wk)
        if want_pl:
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = np.where(rk > 0.0, rk * np.log(fitted), 0.0)
                t2 = np.where(rk < 1.0, (1.0 - rk) * np.log1p(-fitted), 0.0)
            return float(np.sum(wk * (t1 + t2)))
        t = wk * (rk - fitted) * sgn_ext[keep]
        contrib = np.bincount(src_ext[keep], weights=t,
                              minlength=self.m + 1)[:self.m]
        return (self.dhalf.T @ contrib) / self.n ** 2


def _fast_score_replicates(data: Dataset, B: int, seed: int, cfg: dict):
    grid_points = int(cfg.get("grid_points", 4096))
    bisect_tol = float(cfg.get("bisect_tol", 1e-8))
    system = _ResampledScoreSystem(data, B, seed)
    grid = np.linspace(-np.pi, np.pi, grid_points)
    psi = system.psi_grid(grid)
    replicates = []
    for b in range(B):
        flags: list[str] = []
        per_k = []
        for k in (1, 2):
            comp = 2 - k
            pl_grid_eval = lambda b=b: np.array(
                [system._one_rep_eval(th, b, True) for th in grid]
            )
            per_k.append(select_crossing_1d(
                grid, psi[:, b, comp],
                lambda th, b=b, c=comp: float(
                    system._one_rep_eval(th, b, False)[c]
                ),
                lambda th, b=b: system._one_rep_eval(th, b, True),
                pl_grid_eval, bisect_tol, k, flags,
            ))
        theta_mean = combine_crossings(per_k)
        beta = angles_to_beta(theta_mean)
        replicates.append(beta / np.linalg.norm(beta))
    return replicates, 0
