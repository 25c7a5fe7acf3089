"""Random draws used by the Gibbs sampler, plus seed derivation."""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidInputError, NumericalError

LAMBDA_FLOOR = 1e-12
_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the splitmix64 mixer."""
    z = (int(x) + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def replicate_seed(base_seed: int, replicate: int) -> int:
    """Seed of replicate ``r``: ``base_seed XOR splitmix64(r)``.

    Depends only on ``(base_seed, r)`` so any parallel schedule reproduces it.
    """
    return (int(base_seed) & _MASK64) ^ splitmix64(replicate)


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def cholesky_with_jitter(precision: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding diagonal jitter if the plain factorization fails."""
    p = np.asarray(precision, dtype=float)
    try:
        return np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        pass
    d = p.shape[0]
    jitter = 1e-10 * max(abs(np.trace(p)) / d, 1e-300)
    for _ in range(3):
        try:
            return np.linalg.cholesky(p + jitter * np.eye(d))
        except np.linalg.LinAlgError:
            jitter *= 10.0
    try:
        cond = np.linalg.cond(p)
    except np.linalg.LinAlgError:
        cond = float("inf")
    raise NumericalError(f"precision matrix is not positive definite (condition number {cond:.3g})")


def mvn_precision_draw(precision, linear_term, rng) -> np.ndarray:
    """Draw from ``N(P^-1 l, P^-1)`` without forming ``P^-1``."""
    p = np.asarray(precision, dtype=float)
    ell = np.asarray(linear_term, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] != ell.size:
        raise InvalidInputError("precision must be square and match the linear term")
    L = cholesky_with_jitter(p)
    w = solve_triangular(L, ell, lower=True, check_finite=False)
    z = rng.standard_normal(ell.size)
    return solve_triangular(L.T, w + z, lower=False, check_finite=False)


def precision_mean(precision, linear_term) -> np.ndarray:
    """Mean ``P^-1 l`` of the Gaussian drawn by :func:`mvn_precision_draw`."""
    L = cholesky_with_jitter(precision)
    w = solve_triangular(L, np.asarray(linear_term, dtype=float), lower=True, check_finite=False)
    return solve_triangular(L.T, w, lower=False, check_finite=False)


def _check_shape_rate(shape, rate):
    if not (shape > 0.0 and rate > 0.0) or not np.isfinite(shape) or not np.isfinite(rate):
        raise InvalidInputError(f"shape and rate must be positive and finite, got {shape}, {rate}")


def gamma_draw(shape: float, rate: float, rng, size=None):
    _check_shape_rate(shape, rate)
    return rng.gamma(shape, 1.0 / rate, size=size)


def inv_gamma_draw(shape: float, rate: float, rng, size=None):
    return 1.0 / gamma_draw(shape, rate, rng, size=size)
