"""ODE systems that are linear in the parameters of one target equation.

Each built-in constructor returns an :class:`OdeModelSpec`.  Regressors are
vectorized: they take an array whose last axis is the ``p`` state components
and return the regressor value for every leading index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DivergenceError, InvalidInputError

Regressor = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OdeModelSpec:
    name: str
    p: int
    rhs: Callable[[np.ndarray, Mapping[str, float]], np.ndarray]
    regressors: tuple
    regressor_labels: tuple
    target: int = 0  # zero-based component index of the inferred equation
    sim_params: dict = field(default_factory=dict)
    default_knots: tuple = ()

    def __post_init__(self):
        if len(self.regressors) < 1:
            raise InvalidInputError("at least one regressor is required")
        if len(self.regressor_labels) != len(self.regressors):
            raise InvalidInputError("one label per regressor is required")
        if not 0 <= self.target < self.p:
            raise InvalidInputError(f"target index {self.target} outside 0..{self.p - 1}")

    @property
    def b(self) -> int:
        return len(self.regressors)

    @property
    def beta_names(self) -> tuple:
        return tuple(f"beta{j + 1}" for j in range(self.b))

    @property
    def xi_name(self) -> str:
        return f"xi{self.target + 1}"

    def missing_params(self) -> list:
        return sorted(k for k, v in self.sim_params.items() if v is None)

    def require_params(self) -> dict:
        missing = self.missing_params()
        if missing:
            raise ConfigurationError(
                f"{self.name}: simulation needs values for {', '.join(missing)}"
            )
        return dict(self.sim_params)

    def initial_state(self) -> np.ndarray:
        params = self.require_params()
        return np.array([params[f"xi{k + 1}"] for k in range(self.p)], dtype=float)

    def target_truth(self) -> dict:
        """True values of the inferred quantities (``xi`` of the target, then the betas)."""
        names = (self.xi_name,) + self.beta_names
        return {k: self.sim_params.get(k) for k in names}

    def with_params(self, **params) -> "OdeModelSpec":
        unknown = set(params) - set(self.sim_params)
        if unknown:
            raise ConfigurationError(f"{self.name}: unknown parameters {sorted(unknown)}")
        merged = dict(self.sim_params)
        merged.update({k: float(v) for k, v in params.items()})
        return replace(self, sim_params=merged)


@dataclass
class Dataset:
    times: np.ndarray
    y: np.ndarray
    truth: np.ndarray | None = None
    noise_sd: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        self.y = y
        n = self.times.size
        if self.times.ndim != 1 or n < 3:
            raise InvalidInputError("a dataset needs at least 3 time points")
        if y.shape[0] != n:
            raise InvalidInputError(f"{y.shape[0]} observation rows for {n} time points")
        bad = np.flatnonzero(np.diff(self.times) <= 0.0)
        if bad.size:
            raise InvalidInputError(f"times must be strictly increasing (row {bad[0] + 2})")
        if not np.all(np.isfinite(y)):
            row = int(np.argwhere(~np.isfinite(y))[0, 0])
            raise InvalidInputError(f"missing or non-finite observation in row {row + 1}")
        if self.truth is not None:
            tr = np.asarray(self.truth, dtype=float)
            self.truth = tr[:, None] if tr.ndim == 1 else tr
            if self.truth.shape != y.shape:
                raise InvalidInputError("truth must have the same shape as the observations")
        if self.noise_sd is not None:
            self.noise_sd = np.asarray(self.noise_sd, dtype=float).reshape(-1)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.y.shape[1]


def rk4_solve(spec: OdeModelSpec, x0, times, params=None, substeps: int = 20, max_step=None):
    """Classical fixed-step RK4, reported at the observation times.

    Every observation interval is split into at least ``substeps`` steps, and
    into more if ``max_step`` requires it.
    """
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise InvalidInputError("times must be a non-empty 1-d array")
    if np.any(np.diff(t) <= 0.0):
        raise InvalidInputError("times must be strictly increasing")
    if substeps < 1:
        raise InvalidInputError("substeps must be at least 1")
    params = spec.require_params() if params is None else params
    f = spec.rhs
    x = np.array(x0, dtype=float).reshape(spec.p)
    if not np.all(np.isfinite(f(x, params))):
        raise DivergenceError(f"right-hand side is not finite at t={t[0]}", time=float(t[0]))
    out = np.empty((t.size, spec.p))
    out[0] = x
    for i in range(1, t.size):
        dt = t[i] - t[i - 1]
        m = substeps
        if max_step is not None:
            m = max(m, int(math.ceil(dt / max_step - 1e-9)))
        h = dt / m
        for _ in range(m):
            k1 = f(x, params)
            k2 = f(x + 0.5 * h * k1, params)
            k3 = f(x + 0.5 * h * k2, params)
            k4 = f(x + h * k3, params)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"trajectory diverged before t={t[i]}", time=float(t[i]))
        out[i] = x
    return out


def simulate(spec: OdeModelSpec, times, substeps: int = 20) -> np.ndarray:
    return rk4_solve(spec, spec.initial_state(), times, substeps=substeps)


def eval_regressors(spec: OdeModelSpec, states) -> np.ndarray:
    """``n x b`` matrix with entry ``(i, j) = h_j(states[i])``."""
    x = np.asarray(states, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[-1] != spec.p:
        raise InvalidInputError(f"states need {spec.p} columns, got {x.shape[-1]}")
    cols = []
    for j, h in enumerate(spec.regressors):
        v = np.broadcast_to(np.asarray(h(x), dtype=float), x.shape[:-1])
        if not np.all(np.isfinite(v)):
            i = int(np.argmax(~np.isfinite(v)))
            raise InvalidInputError(f"regressor h{j + 1} is not finite at row {i + 1}")
        cols.append(v)
    return np.stack(cols, axis=-1)


NOISE_MODES = ("snr", "prop_of_mean", "sd", "none")


def noise_sd_for(trajectory, mode: str, level) -> np.ndarray:
    x = np.asarray(trajectory, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    p = x.shape[1]
    if mode == "none":
        return np.zeros(p)
    lev = np.broadcast_to(np.asarray(level, dtype=float), (p,)).copy()
    if np.any(~(lev > 0.0)):
        raise InvalidInputError(f"noise level must be positive, got {level!r}")
    if mode == "snr":
        sd = np.std(x, axis=0, ddof=1)
        if np.any(sd == 0.0):
            k = int(np.argmax(sd == 0.0))
            raise InvalidInputError(f"component {k + 1} is constant; SNR is undefined")
        return sd / lev
    if mode == "prop_of_mean":
        return lev * np.mean(np.abs(x), axis=0)
    if mode == "sd":
        return lev
    raise InvalidInputError(f"unknown noise mode {mode!r}; expected one of {NOISE_MODES}")


def inject_noise(trajectory, times, mode: str, level, rng) -> Dataset:
    """Add i.i.d. Gaussian noise per component.

    Modes: ``snr`` (noise sd = sample sd of the component / level),
    ``prop_of_mean`` (level * mean |component|), ``sd`` (level is the sd) and
    ``none``.
    """
    x = np.asarray(trajectory, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("trajectory must be finite")
    sd = noise_sd_for(x, mode, level)
    y = x + rng.standard_normal(x.shape) * sd[None, :]
    return Dataset(times=times, y=y, truth=x.copy(), noise_sd=sd)


def check_linearity(spec: OdeModelSpec, rng, n_states: int = 100, scale: float = 1.0) -> float:
    """Largest gap between the target rhs and ``sum_j beta_j h_j`` at random states/parameters."""
    worst = 0.0
    for _ in range(n_states):
        params = {k: rng.normal() * scale for k in spec.sim_params}
        x = rng.normal(size=spec.p) * scale
        lhs = spec.rhs(x, params)[spec.target]
        rhs = sum(params[name] * float(h(x[None, :])[0]) for name, h in zip(spec.beta_names, spec.regressors))
        worst = max(worst, abs(lhs - rhs))
    return worst


# Built-in systems. Parameters named beta1..betab are the target-equation
# coefficients in regressor order; other names are simulation-only.

def _x(k):
    return lambda x: x[..., k]


def _one(x):
    return np.ones(x.shape[:-1])


def logistic(xi1=0.1, beta1=2.5, beta2=-0.125) -> OdeModelSpec:
    def rhs(x, th):
        return np.array([th["beta1"] * x[0] + th["beta2"] * x[0] ** 2])

    return OdeModelSpec(
        name="logistic",
        p=1,
        rhs=rhs,
        regressors=(_x(0), lambda x: x[..., 0] ** 2),
        regressor_labels=("x1", "x1^2"),
        sim_params={"xi1": xi1, "beta1": beta1, "beta2": beta2},
        default_knots=(2,),
    )


def lotka_volterra(xi1=2.0, beta1=0.1, beta2=-0.2, beta3=None, beta4=None, xi2=None) -> OdeModelSpec:
    def rhs(x, th):
        return np.array([
            th["beta1"] * x[0] + th["beta2"] * x[0] * x[1],
            th["beta3"] * x[1] + th["beta4"] * x[0] * x[1],
        ])

    return OdeModelSpec(
        name="lotka_volterra",
        p=2,
        rhs=rhs,
        regressors=(_x(0), lambda x: x[..., 0] * x[..., 1]),
        regressor_labels=("x1", "x1*x2"),
        sim_params={"xi1": xi1, "xi2": xi2, "beta1": beta1, "beta2": beta2, "beta3": beta3, "beta4": beta4},
        default_knots=(5, 5),
    )


def hiv(xi1=60.0, beta1=20.0, beta2=-0.108, beta3=-0.095e-2, beta4=None, beta5=None, xi2=None, xi3=None) -> OdeModelSpec:
    def rhs(x, th):
        infect = th["beta3"] * x[0] * x[2]
        return np.array([
            th["beta1"] + th["beta2"] * x[0] + infect,
            infect - 0.5 * x[1],
            0.5 * th["beta4"] * x[1] + th["beta5"] * x[2],
        ])

    return OdeModelSpec(
        name="hiv",
        p=3,
        rhs=rhs,
        regressors=(_one, _x(0), lambda x: x[..., 0] * x[..., 2]),
        regressor_labels=("1", "x1", "x1*x3"),
        sim_params={
            "xi1": xi1, "xi2": xi2, "xi3": xi3,
            "beta1": beta1, "beta2": beta2, "beta3": beta3, "beta4": beta4, "beta5": beta5,
        },
        default_knots=(20, 20, 20),
    )


def fitzhugh_nagumo(a=0.2, b=0.2, c=3.0, xi1=0.5, xi2=0.5) -> OdeModelSpec:
    """Second equation written as ``beta1*x1 + beta2 + beta3*x2`` with
    ``beta1 = -1/c``, ``beta2 = a/c``, ``beta3 = -b/c``; ``beta4 = c`` drives the first."""
    def rhs(x, th):
        return np.array([
            th["beta4"] * (x[0] - x[0] ** 3 / 3.0 + x[1]),
            th["beta1"] * x[0] + th["beta2"] + th["beta3"] * x[1],
        ])

    return OdeModelSpec(
        name="fitzhugh_nagumo",
        p=2,
        rhs=rhs,
        regressors=(_x(0), _one, _x(1)),
        regressor_labels=("x1", "1", "x2"),
        target=1,
        sim_params={
            "xi1": xi1, "xi2": xi2,
            "beta1": -1.0 / c, "beta2": a / c, "beta3": -b / c, "beta4": c,
        },
        default_knots=(10, 10),
    )


SYSTEMS = {
    "logistic": logistic,
    "lotka_volterra": lotka_volterra,
    "hiv": hiv,
    "fitzhugh_nagumo": fitzhugh_nagumo,
}


def get_system(name: str, **params) -> OdeModelSpec:
    try:
        ctor = SYSTEMS[name]
    except KeyError:
        raise ConfigurationError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ConfigurationError(f"{name}: {exc}") from None
