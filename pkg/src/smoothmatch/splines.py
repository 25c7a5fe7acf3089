"""Cubic regression spline basis on [0, 1] with its wiggliness penalty.

The basis has ``q + 2`` functions: the constant, the identity and one kernel
function ``R(t, knot)`` per interior knot.  The penalty only touches the kernel
coefficients, so affine functions of time are never penalized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class KnotSet:
    knots: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        if k.ndim != 1 or k.size < 1:
            raise InvalidInputError("a knot set needs at least one knot")
        if np.any(k <= 0.0) or np.any(k >= 1.0):
            raise InvalidInputError("knots must lie strictly inside (0, 1)")
        if np.any(np.diff(k) <= 0.0):
            raise InvalidInputError("knots must be strictly increasing")
        k.setflags(write=False)
        object.__setattr__(self, "knots", k)

    @property
    def q(self) -> int:
        return int(self.knots.size)

    def __len__(self):
        return self.q


@dataclass(frozen=True)
class SplineWorkspace:
    """Basis and penalty for one observed component."""

    knots: KnotSet
    times: np.ndarray  # rescaled
    basis: np.ndarray
    penalty: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def evaluate(self, theta, rescaled_times=None):
        """Spline values ``Psi @ theta``, optionally at other rescaled times."""
        if rescaled_times is None:
            return self.basis @ theta
        return build_basis_matrix(rescaled_times, self.knots) @ theta


def rescale_times(times) -> np.ndarray:
    """Affine map of an increasing grid onto [0, 1]."""
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 3:
        raise InvalidInputError("at least 3 time points are required")
    if not np.all(np.isfinite(t)):
        raise InvalidInputError("times must be finite")
    steps = np.diff(t)
    if np.any(steps <= 0.0):
        i = int(np.argmax(steps <= 0.0)) + 1
        raise InvalidInputError(f"times must be strictly increasing (index {i})")
    span = t[-1] - t[0]
    if span <= 0.0:
        raise InvalidInputError("time span is zero")
    out = (t - t[0]) / span
    out[0], out[-1] = 0.0, 1.0
    return out


def place_knots(rescaled_times, q: int) -> KnotSet:
    """``q`` equally spaced interior knots ``h / (q + 1)``."""
    n = len(rescaled_times)
    if int(q) != q or q < 1:
        raise InvalidInputError(f"knot count must be a positive integer, got {q!r}")
    if q + 2 >= n:
        raise InvalidInputError(
            f"{q} knots give {q + 2} basis functions, which needs more than {n} observations"
        )
    return KnotSet(np.arange(1, q + 1) / (q + 1.0))


def _check_unit(a, name):
    a = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(a < -_EDGE_TOL) or np.any(a > 1.0 + _EDGE_TOL):
        raise InvalidInputError(f"{name} must lie in [0, 1]")
    return np.clip(a, 0.0, 1.0)


def basis_kernel(x, z):
    """Kernel ``R(x, z)`` of the cubic regression spline on [0, 1].

    Broadcasts over array arguments.
    """
    x = _check_unit(x, "x")
    z = _check_unit(z, "z")
    d = np.abs(x - z) - 0.5
    out = ((z - 0.5) ** 2 - 1.0 / 12.0) * ((x - 0.5) ** 2 - 1.0 / 12.0) / 4.0
    out = out - (d**4 - 0.5 * d**2 + 7.0 / 240.0) / 24.0
    return out if out.ndim else float(out)


def build_basis_matrix(rescaled_times, knots: KnotSet) -> np.ndarray:
    t = _check_unit(rescaled_times, "rescaled times")
    psi = np.empty((t.size, knots.q + 2))
    psi[:, 0] = 1.0
    psi[:, 1] = t
    psi[:, 2:] = basis_kernel(t[:, None], knots.knots[None, :])
    return psi


def build_penalty_matrix(knots: KnotSet) -> np.ndarray:
    k = knots.knots
    s = np.zeros((knots.q + 2, knots.q + 2))
    block = basis_kernel(k[:, None], k[None, :])
    s[2:, 2:] = 0.5 * (block + block.T)
    return s


def make_workspace(times, q: int) -> SplineWorkspace:
    """Rescale ``times`` and build basis and penalty for ``q`` knots."""
    t = rescale_times(times)
    knots = place_knots(t, q)
    return SplineWorkspace(
        knots=knots,
        times=t,
        basis=build_basis_matrix(t, knots),
        penalty=build_penalty_matrix(knots),
    )
