"""Isotonic regression of comparison indicators and the step-CDF it yields.

For a fixed direction, the sorted pairwise differences v_(1) <= ... <= v_(K)
carry 0/1 comparison indicators.  The monotone function maximizing the
binomial-form pairwise likelihood is the weighted least-squares isotonic fit
of the indicators, computed by pool-adjacent-violators.  The closed-form
max-min representation

    fit[j] = max_{s<=j} min_{t>=j} (sum_{h=s..t} w_h y_h) / (sum_{h=s..t} w_h)

is kept as an independent O(K^2)-per-index oracle for verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression as _scipy_isotonic

__all__ = ["IsotonicFit", "StepCdf", "pava", "maxmin_oracle", "profile_cdf"]


@dataclass(frozen=True)
class IsotonicFit:
    """Nondecreasing fit plus its pool structure.

    ``pools`` rows are (start, end, mean, weight) with end inclusive; the
    fitted vector is constant on each pool and pool means strictly increase.
    """

    fitted: np.ndarray
    pools: list[tuple[int, int, float, float]]


@dataclass(frozen=True)
class StepCdf:
    """Nondecreasing step function with values in [0, 1].

    Evaluation is left-continuous: F(t) equals the value at the smallest
    knot >= t, the first value before all knots, and the last value at and
    beyond the last knot.
    """

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float).ravel()
        values = np.asarray(self.values, dtype=float).ravel()
        if knots.size != values.size or knots.size == 0:
            raise ValueError("knots and values must be equal-length, nonempty")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if np.any(np.diff(values) < -1e-12):
            raise ValueError("values must be nondecreasing")
        values = np.clip(values, 0.0, 1.0)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.knots, t, side="left")
        idx = np.minimum(idx, self.knots.size - 1)
        return self.values[idx]

    def constant(self) -> bool:
        return bool(self.values[0] == self.values[-1])


def pava(ind: np.ndarray, weights: np.ndarray | None = None) -> IsotonicFit:
    """Weighted least-squares nondecreasing fit of ``ind``.

    Delegates the pool merging to scipy's compiled PAVA; the pool
    decomposition is reconstructed from the block boundaries it reports.
    """
    y = np.asarray(ind, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("empty input")
    if weights is None:
        w = np.ones_like(y)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.size != y.size:
            raise ValueError("weights length mismatch")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
    res = _scipy_isotonic(y, weights=w, increasing=True)
    fitted = np.asarray(res.x, dtype=float)
    blocks = np.asarray(res.blocks, dtype=int)
    pools = [
        (int(blocks[b]), int(blocks[b + 1]) - 1, float(fitted[blocks[b]]),
         float(np.sum(w[blocks[b]:blocks[b + 1]])))
        for b in range(blocks.size - 1)
    ]
    return IsotonicFit(fitted, pools)


def pava_fitted(ind: np.ndarray, weights: np.ndarray | None = None) -> np.ndarray:
    """Fitted values only; thin fast path used by the estimation engine."""
    return _scipy_isotonic(ind, weights=weights, increasing=True).x


def maxmin_oracle(ind: np.ndarray, weights: np.ndarray | None = None,
                  j: int | None = None):
    """Closed-form max-min value(s) of the isotonic fit; verification only.

    ``j`` is a 1-based index; when omitted, the whole fitted vector is
    returned.  Computed directly from weighted interval averages, O(K^2),
    independent of the PAVA code path.
    """
    y = np.asarray(ind, dtype=float).ravel()
    k = y.size
    w = np.ones(k) if weights is None else np.asarray(weights, dtype=float).ravel()
    cw = np.concatenate(([0.0], np.cumsum(w)))
    cs = np.concatenate(([0.0], np.cumsum(w * y)))
    # avg[s, t] = weighted mean of y over positions s..t (0-based, inclusive)
    num = cs[None, 1:] - cs[:-1, None]
    den = cw[None, 1:] - cw[:-1, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = num / den
    # min over t >= j: reversed cumulative minimum along axis 1
    suff_min = np.minimum.accumulate(avg[:, ::-1], axis=1)[:, ::-1]
    # max over s <= j of those minima: cumulative maximum along axis 0
    grid = np.maximum.accumulate(suff_min, axis=0)
    fitted = np.diagonal(grid).copy()
    if j is None:
        return fitted
    if not 1 <= j <= k:
        raise IndexError("j is 1-based and must be in [1, K]")
    return float(fitted[j - 1])


def merge_duplicate_knots(v_sorted: np.ndarray, resp: np.ndarray,
                          weights: np.ndarray):
    """Collapse runs of equal v into single knots by weighted pooling."""
    if v_sorted.size == 0:
        return v_sorted, resp, weights, None
    new_run = np.empty(v_sorted.size, dtype=bool)
    new_run[0] = True
    np.not_equal(v_sorted[1:], v_sorted[:-1], out=new_run[1:])
    if new_run.all():
        return v_sorted, resp, weights, None
    starts = np.flatnonzero(new_run)
    w_merged = np.add.reduceat(weights, starts)
    r_merged = np.add.reduceat(weights * resp, starts) / w_merged
    return v_sorted[starts], r_merged, w_merged, starts


def profile_cdf(pairs) -> StepCdf:
    """Isotonic step CDF maximizing the pairwise likelihood at fixed beta.

    ``pairs`` is a PairSystem (sorted differences, responses, weights).
    Duplicate difference values are pooled into single knots before PAVA.
    """
    v = pairs.v_sorted
    r = pairs.ind_sorted
    w = pairs.weights
    v_k, r_k, w_k, _ = merge_duplicate_knots(v, r, w)
    fitted = pava_fitted(r_k, w_k)
    return StepCdf(v_k, fitted)
