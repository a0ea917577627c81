"""Construction of the sorted pairwise-difference system.

Every estimator in this package works on the K = n(n-1) ordered pairs
(i, j), i != j, through the projected differences v = (X_i - X_j)' beta,
the comparison indicators I(Y_i > Y_j), and per-pair weights (all ones
without censoring, inverse-probability weights with censoring).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .sphere import UnitBeta

__all__ = ["PairSystem", "build_pairs", "ordered_pair_indices"]


@dataclass(frozen=True)
class PairSystem:
    """Jointly sorted pair system.

    ``v_sorted`` is nondecreasing; ``ind_sorted`` holds the pair responses
    in the same order (0/1 indicators for uniform weights, weighted
    responses in [0, 1] for IPW weights); ``weights`` are positive;
    ``perm`` maps sorted positions back to the row index of the ordered
    pair enumeration (i-major, j-minor, skipping i == j).
    """

    v_sorted: np.ndarray
    ind_sorted: np.ndarray
    weights: np.ndarray
    perm: np.ndarray

    @property
    def size(self) -> int:
        return self.v_sorted.size


def ordered_pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row indices (i, j) of all ordered pairs, lexicographic, i != j."""
    i = np.repeat(np.arange(n), n - 1)
    j = np.concatenate([np.delete(np.arange(n), k) for k in range(n)])
    return i, j


def build_pairs(data: Dataset, beta: UnitBeta | np.ndarray,
                weights_mode: str = "uniform", g=None) -> PairSystem:
    """Enumerate, project and sort all ordered pairs.

    ``weights_mode`` is "uniform" or "ipw"; the latter needs censoring
    indicators on ``data`` and a censoring survival function ``g`` (from
    ``pairlik.censored.km_censoring`` or any callable-like step function).
    Ties in v are kept in (i, j) lexicographic order via a stable sort.
    """
    b = beta.beta if isinstance(beta, UnitBeta) else np.asarray(beta, dtype=float)
    n = data.n
    i_idx, j_idx = ordered_pair_indices(n)
    v = (data.x[i_idx] - data.x[j_idx]) @ b
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite pairwise projections")
    ind = (data.y[i_idx] > data.y[j_idx]).astype(float)

    if weights_mode == "uniform":
        resp = ind
        w = np.ones_like(v)
    elif weights_mode == "ipw":
        if data.delta is None:
            raise ValueError("ipw weights need censoring indicators")
        if g is None:
            raise ValueError("ipw weights need a censoring survival function")
        from .censored import pair_ipw_weights

        w_gt, w_le = pair_ipw_weights(data, g, i_idx, j_idx)
        w = w_gt + w_le
        keep = w > 0
        i_idx, j_idx, v, w = i_idx[keep], j_idx[keep], v[keep], w[keep]
        resp = w_gt[keep] / w
    else:
        raise ValueError(f"unknown weights_mode {weights_mode!r}")

    order = np.argsort(v, kind="stable")
    return PairSystem(v[order], resp[order], w[order], order)
