"""Shared evaluation engine for the pairwise profile likelihood and score.

For a direction beta, every estimator needs the isotonic profile fit of the
pair responses along the sorted projections, and then either the profile
log-likelihood or the score vector

    psi(beta) = n^-2 sum_{i != j} w_ij (X_i - X_j) {r_ij - Fhat(v_ij)}.

Both quantities are piecewise constant in beta (they depend on beta only
through the sort order of the projections), so the optimizers evaluate them
at many nearby directions; this module keeps those evaluations cheap.

Two internal representations are used:

* mirror mode: with unit weights and strictly antisymmetric 0/1 responses
  (no response ties, no zero projections) the ordered system of K = n(n-1)
  pairs is the mirror image of its first half.  The isotonic fit of the
  full system then equals, on the positive half, the fit of the half system
  floored at 1/2, which halves the sort and regression work.  Likelihood
  and score are twice the half-system sums.
* full mode: the general ordered system (censoring weights, response ties,
  zero projections) is materialized, duplicate knots are pooled, and the
  weighted isotonic fit is computed directly.

The two modes agree exactly up to floating-point summation order; mode
selection depends only on the constructed system, never on the call site,
so pipelines that reduce to one another take identical code paths.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .isotonic import StepCdf, merge_duplicate_knots, pava_fitted

__all__ = ["PairEngine", "ProfileDetail"]

_CHUNK = 96


def _binomial_loglik(resp, fitted, weights=None, axis=0):
    """sum w [r log f + (1-r) log(1-f)] with the 0*log0 := 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(resp > 0.0, resp * np.log(fitted), 0.0)
        t2 = np.where(resp < 1.0, (1.0 - resp) * np.log1p(-fitted), 0.0)
    terms = t1 + t2
    if weights is not None:
        terms = terms * weights
    return terms.sum(axis=axis)


class ProfileDetail:
    """Full evaluation at one direction: fit, likelihood, score."""

    __slots__ = ("pl", "psi", "cdf", "knot_fitted", "knot_resp", "knot_weight")

    def __init__(self, pl, psi, cdf, knot_fitted, knot_resp, knot_weight):
        self.pl = pl
        self.psi = psi
        self.cdf = cdf
        self.knot_fitted = knot_fitted
        self.knot_resp = knot_resp
        self.knot_weight = knot_weight


class PairEngine:
    """Evaluator bound to one dataset (or one weighted pair system)."""

    def __init__(self, dhalf, r_fwd, r_bwd, w_fwd, w_bwd, n):
        self.dhalf = np.ascontiguousarray(dhalf, dtype=float)
        self.r_fwd = np.asarray(r_fwd, dtype=float)
        self.r_bwd = np.asarray(r_bwd, dtype=float)
        self.w_fwd = np.asarray(w_fwd, dtype=float)
        self.w_bwd = np.asarray(w_bwd, dtype=float)
        self.n = int(n)
        self.p = self.dhalf.shape[1]
        self.m = self.dhalf.shape[0]
        self.mirror = bool(
            np.array_equal(self.w_fwd, self.w_bwd)
            and np.array_equal(self.r_bwd, 1.0 - self.r_fwd)
        )
        # full-system layout: forward pairs then backward pairs, zero-weight
        # pairs dropped once (the masks do not depend on beta)
        kf = self.w_fwd > 0
        kb = self.w_bwd > 0
        self._src = np.concatenate([np.flatnonzero(kf), np.flatnonzero(kb)])
        self._sgn = np.concatenate([
            np.ones(int(kf.sum())), -np.ones(int(kb.sum()))
        ])
        self._r_full = np.concatenate([self.r_fwd[kf], self.r_bwd[kb]])
        self._w_full = np.concatenate([self.w_fwd[kf], self.w_bwd[kb]])

    # -- constructors -----------------------------------------------------

    @classmethod
    def uncensored(cls, data: Dataset, tie_mode: str = "strict") -> "PairEngine":
        iu, ju = np.triu_indices(data.n, k=1)
        dhalf = data.x[iu] - data.x[ju]
        yi, yj = data.y[iu], data.y[ju]
        if tie_mode == "strict":
            r_fwd = (yi > yj).astype(float)
            r_bwd = (yj > yi).astype(float)
        elif tie_mode == "tie_aware":
            r_fwd = (yi >= yj).astype(float)
            r_bwd = (yj >= yi).astype(float)
        else:
            raise ValueError(f"unknown tie_mode {tie_mode!r}")
        ones = np.ones(iu.size)
        return cls(dhalf, r_fwd, r_bwd, ones, ones, data.n)

    @classmethod
    def weighted(cls, data: Dataset, r_fwd, r_bwd, w_fwd, w_bwd) -> "PairEngine":
        iu, ju = np.triu_indices(data.n, k=1)
        dhalf = data.x[iu] - data.x[ju]
        return cls(dhalf, r_fwd, r_bwd, w_fwd, w_bwd, data.n)

    # -- mirror-mode internals --------------------------------------------

    def _half_fit(self, v):
        """Sorted half system and its floored isotonic fit for one column."""
        a = np.abs(v)
        resp = np.where(v < 0.0, self.r_bwd, self.r_fwd)
        order = np.argsort(a)
        a_s = a[order]
        r_s = resp[order]
        w_s = self.w_fwd[order]
        knots, r_k, w_k, starts = merge_duplicate_knots(a_s, r_s, w_s)
        fitted_k = np.maximum(pava_fitted(r_k, w_k), 0.5)
        if starts is None:
            fitted = fitted_k
        else:
            reps = np.diff(np.append(starts, a_s.size))
            fitted = np.repeat(fitted_k, reps)
        return order, a_s, r_s, w_s, knots, r_k, w_k, fitted_k, fitted

    # -- public evaluation ------------------------------------------------

    def pl_batch(self, betas: np.ndarray) -> np.ndarray:
        """Profile log-likelihood at each column of ``betas`` (p x m)."""
        return self._batch(betas, want_pl=True, want_psi=False)[0]

    def psi_batch(self, betas: np.ndarray) -> np.ndarray:
        """Score vectors at each column of ``betas``; shape (p, m)."""
        return self._batch(betas, want_pl=False, want_psi=True)[1]

    def pl_psi(self, beta: np.ndarray):
        pl, psi = self._batch(np.asarray(beta, float)[:, None], True, True)
        return float(pl[0]), psi[:, 0]

    def pl_value(self, beta: np.ndarray) -> float:
        return float(self.pl_batch(np.asarray(beta, float)[:, None])[0])

    def psi_value(self, beta: np.ndarray) -> np.ndarray:
        return self.psi_batch(np.asarray(beta, float)[:, None])[:, 0]

    def _batch(self, betas, want_pl, want_psi):
        betas = np.asarray(betas, dtype=float)
        m_cols = betas.shape[1]
        pl = np.empty(m_cols) if want_pl else None
        psi = np.empty((self.p, m_cols)) if want_psi else None
        for lo in range(0, m_cols, _CHUNK):
            hi = min(lo + _CHUNK, m_cols)
            self._chunk(betas[:, lo:hi], pl, psi, lo, want_pl, want_psi)
        return pl, psi

    def _chunk(self, b_chunk, pl, psi, offset, want_pl, want_psi):
        v_cols = self.dhalf @ b_chunk
        c = v_cols.shape[1]
        if self.mirror:
            zero_free = ~np.any(v_cols == 0.0, axis=0)
        else:
            zero_free = np.zeros(c, dtype=bool)
        if zero_free.any():
            self._mirror_cols(v_cols, zero_free, pl, psi, offset, want_pl, want_psi)
        for k in np.flatnonzero(~zero_free):
            plv, psiv = self._full_col(v_cols[:, k], want_pl, want_psi)
            if want_pl:
                pl[offset + k] = plv
            if want_psi:
                psi[:, offset + k] = psiv

    def _mirror_cols(self, v_cols, mask, pl, psi, offset, want_pl, want_psi):
        # row-major layout (one evaluation per row) keeps the sorts and
        # gathers on contiguous memory
        cols = np.flatnonzero(mask)
        v = np.ascontiguousarray(v_cols[:, cols].T)
        neg = v < 0.0
        a = np.abs(v)
        resp = np.where(neg, self.r_bwd[None, :], self.r_fwd[None, :])
        order = np.argsort(a, axis=1)
        a_s = np.take_along_axis(a, order, axis=1)
        r_s = np.take_along_axis(resp, order, axis=1)
        w_s = self.w_fwd[order]
        fit_s = np.empty_like(r_s)
        dup_rows = np.any(a_s[:, 1:] == a_s[:, :-1], axis=1)
        for k in range(cols.size):
            if dup_rows[k]:
                knots, r_k, w_k, starts = merge_duplicate_knots(
                    a_s[k], r_s[k], w_s[k]
                )
                f_k = np.maximum(pava_fitted(r_k, w_k), 0.5)
                reps = np.diff(np.append(starts, self.m)) if starts is not None \
                    else np.ones(knots.size, dtype=int)
                fit_s[k] = np.repeat(f_k, reps)
            else:
                fit_s[k] = np.maximum(pava_fitted(r_s[k], w_s[k]), 0.5)
        if want_pl:
            pl[offset + cols] = 2.0 * _binomial_loglik(r_s, fit_s, w_s, axis=1)
        if want_psi:
            t_sorted = w_s * (r_s - fit_s)
            t = np.empty_like(t_sorted)
            np.put_along_axis(t, order, t_sorted, axis=1)
            t[neg] = -t[neg]
            psi[:, offset + cols] = (2.0 / self.n ** 2) * (self.dhalf.T @ t.T)

    def _full_col(self, v_half, want_pl, want_psi):
        v = self._sgn * v_half[self._src]
        order = np.argsort(v)
        v_s = v[order]
        r_s = self._r_full[order]
        w_s = self._w_full[order]
        knots, r_k, w_k, starts = merge_duplicate_knots(v_s, r_s, w_s)
        fitted_k = pava_fitted(r_k, w_k)
        if starts is None:
            fitted = fitted_k
        else:
            reps = np.diff(np.append(starts, v_s.size))
            fitted = np.repeat(fitted_k, reps)
        plv = _binomial_loglik(r_k, fitted_k, w_k) if want_pl else None
        psiv = None
        if want_psi:
            t = np.empty_like(fitted)
            t[order] = w_s * (r_s - fitted)
            contrib = np.bincount(
                self._src, weights=t * self._sgn, minlength=self.m
            )
            psiv = (self.dhalf.T @ contrib) / self.n ** 2
        return plv, psiv

    # -- detailed single-direction evaluation ------------------------------

    def detail(self, beta: np.ndarray) -> ProfileDetail:
        """Likelihood, score, step CDF and pool data at one direction."""
        beta = np.asarray(beta, dtype=float)
        v_half = self.dhalf @ beta
        if self.mirror and not np.any(v_half == 0.0):
            order, a_s, r_s, w_s, knots, r_k, w_k, fitted_k, fitted = \
                self._half_fit(v_half)
            pl = 2.0 * float(_binomial_loglik(r_s, fitted, w_s))
            t_sorted = w_s * (r_s - fitted)
            t = np.empty_like(t_sorted)
            t[order] = t_sorted
            t[v_half < 0.0] *= -1.0
            psi = (2.0 / self.n ** 2) * (self.dhalf.T @ t)
            cdf = StepCdf(
                np.concatenate([-knots[::-1], knots]),
                np.concatenate([1.0 - fitted_k[::-1], fitted_k]),
            )
            return ProfileDetail(pl, psi, cdf, fitted_k, r_k, w_k)
        v = self._sgn * v_half[self._src]
        order = np.argsort(v)
        v_s, r_s, w_s = v[order], self._r_full[order], self._w_full[order]
        knots, r_k, w_k, starts = merge_duplicate_knots(v_s, r_s, w_s)
        fitted_k = pava_fitted(r_k, w_k)
        reps = (np.diff(np.append(starts, v_s.size)) if starts is not None
                else np.ones(knots.size, dtype=int))
        fitted = np.repeat(fitted_k, reps)
        pl = float(_binomial_loglik(r_k, fitted_k, w_k))
        t = np.empty_like(fitted)
        t[order] = w_s * (r_s - fitted)
        contrib = np.bincount(self._src, weights=t * self._sgn, minlength=self.m)
        psi = (self.dhalf.T @ contrib) / self.n ** 2
        cdf = StepCdf(knots, fitted_k)
        return ProfileDetail(pl, psi, cdf, fitted_k, r_k, w_k)
