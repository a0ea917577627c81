"""Polar-coordinate chart for unit-norm coefficient vectors.

The coefficient vector is identified only up to scale, so estimation is
carried out on the unit sphere through the chart

    beta_1 = cos(t_1)
    beta_2 = sin(t_1) cos(t_2)
    ...
    beta_{p-1} = sin(t_1) ... sin(t_{p-2}) cos(t_{p-1})
    beta_p     = sin(t_1) ... sin(t_{p-2}) sin(t_{p-1})

with each angle in [-pi, pi].  Optimizers work on the (p-1) angles; the
chart guarantees the unit-norm constraint by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PolarAngles", "UnitBeta", "to_beta", "to_angles", "angles_to_beta"]

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class PolarAngles:
    """Angles of the polar chart; length p-1, components in [-pi, pi]."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if theta.ndim != 1:
            raise ValueError("theta must be a vector")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if np.any(np.abs(theta) > np.pi + 1e-9):
            raise ValueError("theta components must lie in [-pi, pi]")
        object.__setattr__(self, "theta", theta)

    @property
    def p(self) -> int:
        return self.theta.size + 1


@dataclass(frozen=True)
class UnitBeta:
    """Coefficient vector with Euclidean norm 1."""

    beta: np.ndarray

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if beta.ndim != 1:
            raise ValueError("beta must be a vector")
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta must be finite")
        nrm = np.linalg.norm(beta)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"beta must have unit norm, got {nrm!r}")
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return self.beta.size


def angles_to_beta(theta: np.ndarray) -> np.ndarray:
    """Raw-array version of the chart map; used in optimizer inner loops.

    Accepts a (p-1,) vector or a (p-1, m) batch of angle columns and
    returns the matching (p,) vector or (p, m) matrix of unit vectors.
    Angles outside [-pi, pi] are accepted (the map is periodic).
    """
    theta = np.asarray(theta, dtype=float)
    batched = theta.ndim == 2
    t = theta if batched else theta[:, None]
    q = t.shape[0] + 1
    beta = np.empty((q,) + t.shape[1:])
    sin_prod = np.ones(t.shape[1:])
    for k in range(q - 1):
        beta[k] = sin_prod * np.cos(t[k])
        sin_prod = sin_prod * np.sin(t[k])
    beta[q - 1] = sin_prod
    return beta if batched else beta[:, 0]


def to_beta(angles: PolarAngles) -> UnitBeta:
    """Map polar angles to the unit sphere."""
    b = angles_to_beta(angles.theta)
    # Guard against accumulated rounding for large p.
    b = b / np.linalg.norm(b)
    return UnitBeta(b)


def to_angles(beta: UnitBeta | np.ndarray) -> PolarAngles:
    """Inverse chart: recover angles whose image is ``beta``.

    At chart singularities (a trailing sub-vector aligned with an axis)
    the remaining angles are set to 0, which still maps back to ``beta``.
    """
    b = beta.beta if isinstance(beta, UnitBeta) else np.asarray(beta, dtype=float)
    p = b.size
    if p < 2:
        raise ValueError("the chart needs p >= 2")
    theta = np.zeros(p - 1)
    # arccos ladder: theta_k in [0, pi] since the residual norm is >= 0.
    for k in range(p - 2):
        tail = np.linalg.norm(b[k:])
        if tail == 0.0:
            break
        c = np.clip(b[k] / tail, -1.0, 1.0)
        theta[k] = np.arccos(c)
    if np.hypot(b[p - 2], b[p - 1]) > 0.0:
        theta[p - 2] = np.arctan2(b[p - 1], b[p - 2])
    return PolarAngles(theta)
