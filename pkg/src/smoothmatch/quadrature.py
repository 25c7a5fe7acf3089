"""Cumulative trapezoidal integration of regressor columns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class DesignMatrix:
    H: np.ndarray
    times: np.ndarray


def _check_grid(times, n_values=None):
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise InvalidInputError("integration grid needs at least 2 points")
    if n_values is not None and n_values != t.size:
        raise InvalidInputError(f"length mismatch: {n_values} values on {t.size} time points")
    if np.any(np.diff(t) <= 0.0):
        raise InvalidInputError("integration grid must be strictly increasing")
    return t


def cumtrapz(values, times) -> np.ndarray:
    """Running trapezoid integral from ``times[0]``; works column-wise on 2-d input."""
    v = np.asarray(values, dtype=float)
    t = _check_grid(times, v.shape[0] if v.ndim else None)
    return _cumtrapz(v, t)


def _cumtrapz(v, t):
    dt = np.diff(t)
    if v.ndim > 1:
        dt = dt.reshape((-1,) + (1,) * (v.ndim - 1))
    out = np.zeros_like(v)
    np.cumsum(0.5 * dt * (v[1:] + v[:-1]), axis=0, out=out[1:])
    return out


def refine_grid(times, refine: int = 1) -> np.ndarray:
    """Insert ``refine - 1`` equally spaced points in every interval.

    Observed points sit at indices ``0, refine, 2 * refine, ...``.
    """
    t = _check_grid(times)
    if int(refine) != refine or refine < 1:
        raise InvalidInputError(f"refine must be a positive integer, got {refine!r}")
    if refine == 1:
        return t
    frac = np.arange(refine) / refine
    inner = t[:-1, None] + np.diff(t)[:, None] * frac[None, :]
    return np.append(inner.ravel(), t[-1])


def design_from_dense(regressor_values, dense_times, refine: int = 1) -> DesignMatrix:
    """Integrate regressor values given on a refined grid; sample back at observed points."""
    h = np.asarray(regressor_values, dtype=float)
    H = _cumtrapz(h, np.asarray(dense_times, dtype=float))[::refine]
    return DesignMatrix(H=H, times=np.asarray(dense_times)[::refine])


def build_design(states, times, regressors, refine: int = 1) -> DesignMatrix:
    """Design matrix ``H`` with ``H[i, j] = int_{t_1}^{t_i} h_j(x(s)) ds``.

    ``states`` is the ``n x p`` matrix of component values at ``times``.  With
    ``refine > 1`` the states are linearly interpolated onto the refined grid
    before the regressors are evaluated, so nonlinear ``h_j`` gain accuracy.
    """
    x = np.asarray(states, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    t = _check_grid(times, x.shape[0])
    dense = refine_grid(t, refine)
    if refine > 1:
        x = np.column_stack([np.interp(dense, t, x[:, k]) for k in range(x.shape[1])])
    h = np.column_stack([np.broadcast_to(f(x), (x.shape[0],)) for f in regressors])
    return design_from_dense(h, dense, refine)
