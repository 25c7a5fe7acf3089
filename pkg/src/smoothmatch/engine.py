"""Bayesian Smooth-and-Match Gibbs sampler.

Every iteration runs a *smooth* step (penalized-spline updates for each
component, ignoring the integral representation of the target) followed by a
*match* step (ridge regression of the target observations on integrated
regressors built from the current smoothed components).

The target component's noise variance is shared between both steps: it is
updated from the smoothing residuals and the matching residuals together.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import samplers
from .errors import InvalidInputError, NumericalError
from .quadrature import DesignMatrix, design_from_dense, refine_grid
from .splines import SplineWorkspace, build_basis_matrix, make_workspace
from .systems import Dataset, OdeModelSpec

log = logging.getLogger(__name__)

SIGMA2_INIT_FLOOR = 1e-8
RATE_FLOOR = 1e-12


@dataclass(frozen=True)
class HyperParams:
    """Gamma(shape, rate) priors on the smoothing penalties and on the ridge penalty.

    ``alpha_theta``/``gamma_theta`` may be scalars or one value per component.
    """

    alpha_theta: float | Sequence[float] = 0.01
    gamma_theta: float | Sequence[float] = 0.01
    alpha_beta: float = 0.01
    gamma_beta: float = 0.01

    def per_component(self, p: int):
        a = np.broadcast_to(np.asarray(self.alpha_theta, dtype=float), (p,)).copy()
        g = np.broadcast_to(np.asarray(self.gamma_theta, dtype=float), (p,)).copy()
        if np.any(a <= 0) or np.any(g <= 0) or self.alpha_beta <= 0 or self.gamma_beta <= 0:
            raise InvalidInputError("all prior shapes and rates must be positive")
        return a, g


@dataclass(frozen=True)
class FitConfig:
    iterations: int = 10000
    burn_in: int = 5000
    thin: int = 1
    knots: tuple | None = None  # per component; None uses the system defaults
    hyper: HyperParams = field(default_factory=HyperParams)
    refine: int = 1
    seed: int | None = None
    init: str = "gcv"  # or "unit": penalty 1 for every component

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidInputError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise InvalidInputError("burn_in must be in [0, iterations)")
        if self.thin < 1:
            raise InvalidInputError("thin must be at least 1")
        if self.refine < 1:
            raise InvalidInputError("refine must be at least 1")
        if self.init not in ("gcv", "unit"):
            raise InvalidInputError(f"init must be 'gcv' or 'unit', got {self.init!r}")


@dataclass
class ChainState:
    theta: list
    lambda_theta: np.ndarray
    sigma2: np.ndarray
    beta: np.ndarray
    lambda_beta: float
    xi: float

    def copy(self) -> "ChainState":
        return ChainState(
            theta=[t.copy() for t in self.theta],
            lambda_theta=self.lambda_theta.copy(),
            sigma2=self.sigma2.copy(),
            beta=self.beta.copy(),
            lambda_beta=self.lambda_beta,
            xi=self.xi,
        )


class Problem:
    """Data, model and precomputed spline quantities for one fit."""

    def __init__(self, dataset: Dataset, spec: OdeModelSpec, config: FitConfig | None = None,
                 workspaces: Sequence[SplineWorkspace] | None = None):
        config = config or FitConfig()
        if dataset.p != spec.p:
            raise InvalidInputError(f"dataset has {dataset.p} components, {spec.name} needs {spec.p}")
        self.dataset = dataset
        self.spec = spec
        self.config = config
        self.target = spec.target
        self.n, self.p, self.b = dataset.n, spec.p, spec.b
        if workspaces is None:
            knots = config.knots if config.knots is not None else spec.default_knots
            knots = tuple(np.broadcast_to(np.asarray(knots, dtype=int), (self.p,)))
            workspaces = [make_workspace(dataset.times, int(q)) for q in knots]
        if len(workspaces) != self.p:
            raise InvalidInputError("one spline workspace per component is required")
        self.workspaces = list(workspaces)
        self.alpha_theta, self.gamma_theta = config.hyper.per_component(self.p)
        self.alpha_beta, self.gamma_beta = config.hyper.alpha_beta, config.hyper.gamma_beta
        y = dataset.y
        self.gram = [ws.basis.T @ ws.basis for ws in self.workspaces]
        self.proj = [ws.basis.T @ y[:, k] for k, ws in enumerate(self.workspaces)]
        self.y_target = y[:, self.target]
        self.refine = int(config.refine)
        self.dense_times = refine_grid(dataset.times, self.refine)
        if self.refine > 1:
            t = dataset.times
            dense_rescaled = np.clip((self.dense_times - t[0]) / (t[-1] - t[0]), 0.0, 1.0)
            self.dense_basis = [build_basis_matrix(dense_rescaled, ws.knots) for ws in self.workspaces]
        else:
            self.dense_basis = [ws.basis for ws in self.workspaces]

    def smoothed(self, state: ChainState, k: int) -> np.ndarray:
        return self.workspaces[k].basis @ state.theta[k]

    def design(self, state: ChainState) -> DesignMatrix:
        """Design matrix from the current smoothed components (not the raw data)."""
        states = np.column_stack([B @ th for B, th in zip(self.dense_basis, state.theta)])
        h = np.column_stack([
            np.broadcast_to(f(states), (states.shape[0],)) for f in self.spec.regressors
        ])
        if not np.all(np.isfinite(h)):
            raise NumericalError("regressors are not finite on the smoothed components")
        return design_from_dense(h, self.dense_times, self.refine)


GCV_GRID = np.logspace(-12.0, 2.0, 57)


def _penalized_fit(gram, proj, penalty, lam):
    return np.linalg.solve(gram + lam * penalty, proj)


def gcv_penalty(ws: SplineWorkspace, y, grid=GCV_GRID) -> float:
    """Penalty minimizing the generalized cross-validation score of a spline fit.

    The grid is relative to ``trace(Psi'Psi) / trace(S)`` so it adapts to the
    basis scaling.
    """
    gram = ws.basis.T @ ws.basis
    scale = np.trace(gram) / max(np.trace(ws.penalty), 1e-300)
    n = y.size
    best, best_lam = np.inf, 1.0
    for rho in grid:
        lam = rho * scale
        try:
            A = np.linalg.solve(gram + lam * ws.penalty, ws.basis.T)
        except np.linalg.LinAlgError:
            continue
        resid = y - ws.basis @ (A @ y)
        with np.errstate(over="ignore"):
            rss = float(resid @ resid)
        if not np.isfinite(rss):
            continue
        edf = float(np.einsum("ij,ji->", ws.basis, A))
        score = n * rss / max(n - edf, 1e-12) ** 2
        if score < best:
            best, best_lam = score, lam
    return best_lam


def init_state(problem: Problem, method: str | None = None) -> ChainState:
    """Penalized least-squares start with zero beta and unit ridge penalty.

    ``method="unit"`` fits every spline with penalty 1; ``"gcv"`` (the
    default) picks each penalty by GCV, which keeps oscillating components
    from starting in an oversmoothed state the Gibbs updates cannot leave.
    """
    method = method or problem.config.init
    theta, sigma2 = [], np.empty(problem.p)
    lambdas = np.ones(problem.p)
    y = problem.dataset.y
    for k, ws in enumerate(problem.workspaces):
        if method == "gcv":
            lambdas[k] = gcv_penalty(ws, y[:, k])
        try:
            th = _penalized_fit(problem.gram[k], problem.proj[k], ws.penalty, lambdas[k])
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"initial spline system for component {k + 1} is singular") from exc
        theta.append(th)
        resid = y[:, k] - ws.basis @ th
        with np.errstate(over="ignore"):
            rss = float(resid @ resid)
        if not np.isfinite(rss):
            raise NumericalError(f"initial residuals of component {k + 1} overflow")
        sigma2[k] = max(rss / problem.n, SIGMA2_INIT_FLOOR)
    return ChainState(
        theta=theta,
        lambda_theta=lambdas,
        sigma2=sigma2,
        beta=np.zeros(problem.b),
        lambda_beta=1.0,
        xi=float(y[0, problem.target]),
    )


# ---------------------------------------------------------------- smooth step

def theta_conditional(gram, proj, penalty, lam, sigma2):
    """Precision and linear term of the spline coefficients' full conditional."""
    return lam * penalty + gram / sigma2, proj / sigma2


def sample_theta_k(k: int, state: ChainState, problem: Problem, rng) -> np.ndarray:
    prec, lin = theta_conditional(
        problem.gram[k], problem.proj[k], problem.workspaces[k].penalty,
        state.lambda_theta[k], state.sigma2[k],
    )
    return samplers.mvn_precision_draw(prec, lin, rng)


def _finite(rate, what):
    if not np.isfinite(rate):
        raise NumericalError(f"{what} rate is not finite")
    return rate


def _floored_rate(rate, what):
    _finite(rate, what)
    if rate < RATE_FLOOR:
        log.warning("%s rate %.3g floored at %g", what, rate, RATE_FLOOR)
        return RATE_FLOOR
    return rate


def sample_sigma2_k(k: int, state: ChainState, problem: Problem, rng) -> float:
    """Noise variance of a non-target component: InvGamma(n/2, RSS/2)."""
    if k == problem.target:
        raise InvalidInputError("the target variance is updated in the match step")
    resid = problem.dataset.y[:, k] - problem.smoothed(state, k)
    rate = _floored_rate(0.5 * float(resid @ resid), f"sigma2_{k + 1}")
    return float(samplers.inv_gamma_draw(0.5 * problem.n, rate, rng))


def sample_lambda_theta_k(k: int, state: ChainState, problem: Problem, rng) -> float:
    ws = problem.workspaces[k]
    th = state.theta[k]
    shape = 0.5 * ws.dim + problem.alpha_theta[k]
    rate = _finite(0.5 * max(float(th @ ws.penalty @ th), 0.0) + problem.gamma_theta[k], f"lambda_theta_{k + 1}")
    return max(float(samplers.gamma_draw(shape, rate, rng)), samplers.LAMBDA_FLOOR)


def smooth_step(state: ChainState, problem: Problem, rngs, order=None) -> ChainState:
    """Update theta, lambda_theta and (off-target) sigma2 for every component.

    ``rngs`` holds one generator per component, or a single generator shared
    by all of them.
    """
    if isinstance(rngs, np.random.Generator):
        rngs = [rngs] * problem.p
    for k in (range(problem.p) if order is None else order):
        rng = rngs[k]
        state.theta[k] = sample_theta_k(k, state, problem, rng)
        state.lambda_theta[k] = sample_lambda_theta_k(k, state, problem, rng)
        if k != problem.target:
            state.sigma2[k] = sample_sigma2_k(k, state, problem, rng)
    return state


# ----------------------------------------------------------------- match step

def beta_conditional(H, y_tilde, lambda_beta, sigma2):
    """Precision and linear term of the ridge-regression full conditional of beta."""
    H = np.asarray(H, dtype=float)
    prec = lambda_beta * np.eye(H.shape[1]) + (H.T @ H) / sigma2
    return prec, (H.T @ y_tilde) / sigma2


def sample_beta(state: ChainState, design: DesignMatrix, problem: Problem, rng) -> np.ndarray:
    y_tilde = problem.y_target - state.xi
    prec, lin = beta_conditional(design.H, y_tilde, state.lambda_beta, state.sigma2[problem.target])
    return samplers.mvn_precision_draw(prec, lin, rng)


def sample_xi(state: ChainState, design: DesignMatrix, problem: Problem, rng) -> float:
    """Initial condition: Normal(y_11 - H_1 beta, sigma2_1).

    Only the first observation enters; since ``H`` starts at zero the mean is
    the first target observation.
    """
    mean = problem.y_target[0] - float(design.H[0] @ state.beta)
    return float(mean + np.sqrt(state.sigma2[problem.target]) * rng.standard_normal())


def sample_lambda_beta(state: ChainState, problem: Problem, rng) -> float:
    shape = 0.5 * problem.b + problem.alpha_beta
    rate = _finite(0.5 * float(state.beta @ state.beta) + problem.gamma_beta, "lambda_beta")
    return max(float(samplers.gamma_draw(shape, rate, rng)), samplers.LAMBDA_FLOOR)


def sigma2_target_params(state: ChainState, design: DesignMatrix, problem: Problem):
    """Shape and rate of the shared target variance's full conditional."""
    match_resid = problem.y_target - state.xi - design.H @ state.beta
    smooth_resid = problem.y_target - problem.smoothed(state, problem.target)
    rate = 0.5 * float(match_resid @ match_resid) + 0.5 * float(smooth_resid @ smooth_resid)
    return float(problem.n), rate


def sample_sigma2_target(state: ChainState, design: DesignMatrix, problem: Problem, rng) -> float:
    shape, rate = sigma2_target_params(state, design, problem)
    rate = _floored_rate(rate, f"sigma2_{problem.target + 1}")
    return float(samplers.inv_gamma_draw(shape, rate, rng))


def match_step(state: ChainState, problem: Problem, rng) -> tuple[ChainState, DesignMatrix]:
    design = problem.design(state)
    state.beta = sample_beta(state, design, problem, rng)
    state.xi = sample_xi(state, design, problem, rng)
    state.lambda_beta = sample_lambda_beta(state, problem, rng)
    state.sigma2[problem.target] = sample_sigma2_target(state, design, problem, rng)
    return state, design


# ---------------------------------------------------------------------- chain

class Chains:
    """Thinned draws of one run plus derived curves.

    ``reconstructed[i]`` is the integral-form solution ``xi + H beta`` of the
    target at recorded iteration ``i``.  ``design_mean`` averages ``H`` over
    recorded iterations past the configured burn-in.
    """

    def __init__(self, problem: Problem, size: int):
        p, b, n = problem.p, problem.b, problem.n
        self.problem = problem
        self.iteration = np.zeros(size, dtype=int)
        self.theta = [np.zeros((size, ws.dim)) for ws in problem.workspaces]
        self.lambda_theta = np.zeros((size, p))
        self.sigma2 = np.zeros((size, p))
        self.beta = np.zeros((size, b))
        self.lambda_beta = np.zeros(size)
        self.xi = np.zeros(size)
        self.reconstructed = np.zeros((size, n))
        self._design_sum = np.zeros((n, b))
        self._design_count = 0

    def __len__(self):
        return self.iteration.size

    def record(self, i: int, iteration: int, state: ChainState, design: DesignMatrix, past_burn_in: bool):
        self.iteration[i] = iteration
        for k, th in enumerate(state.theta):
            self.theta[k][i] = th
        self.lambda_theta[i] = state.lambda_theta
        self.sigma2[i] = state.sigma2
        self.beta[i] = state.beta
        self.lambda_beta[i] = state.lambda_beta
        self.xi[i] = state.xi
        self.reconstructed[i] = state.xi + design.H @ state.beta
        if past_burn_in:
            self._design_sum += design.H
            self._design_count += 1

    @property
    def design_mean(self) -> np.ndarray:
        if self._design_count == 0:
            return self._design_sum
        return self._design_sum / self._design_count

    def params(self) -> dict:
        """Scalar chains keyed by parameter name, target quantities first."""
        spec = self.problem.spec
        t = spec.target
        out = {spec.xi_name: self.xi}
        for j, name in enumerate(spec.beta_names):
            out[name] = self.beta[:, j]
        out[f"sigma2_{t + 1}"] = self.sigma2[:, t]
        for k in range(self.problem.p):
            if k != t:
                out[f"sigma2_{k + 1}"] = self.sigma2[:, k]
        for k in range(self.problem.p):
            out[f"lambda_theta_{k + 1}"] = self.lambda_theta[:, k]
        out["lambda_beta"] = self.lambda_beta
        return out

    def kept(self, burn_in: int | None = None) -> np.ndarray:
        burn_in = self.problem.config.burn_in if burn_in is None else burn_in
        return self.iteration > burn_in

    def smoothed(self, k: int, burn_in: int | None = None) -> np.ndarray:
        """Spline curve of component ``k`` at the posterior-mean coefficients."""
        theta_hat = self.theta[k][self.kept(burn_in)].mean(axis=0)
        return self.problem.workspaces[k].basis @ theta_hat

    def reconstructed_curve(self) -> np.ndarray:
        """Plug-in solution ``mean(xi) + mean(H) mean(beta)`` past the configured burn-in."""
        keep = self.kept()
        return self.xi[keep].mean() + self.design_mean @ self.beta[keep].mean(axis=0)


def run_chain(dataset: Dataset, spec: OdeModelSpec, config: FitConfig | None = None, rng=None,
              problem: Problem | None = None) -> Chains:
    """Initialize, then alternate smooth and match steps for ``config.iterations``."""
    config = config or FitConfig()
    problem = problem or Problem(dataset, spec, config)
    rng = samplers.make_rng(config.seed if rng is None else rng)
    streams = rng.spawn(problem.p + 1)
    component_rngs, match_rng = streams[:-1], streams[-1]
    state = init_state(problem)
    chains = Chains(problem, config.iterations // config.thin)
    slot = 0
    for it in range(1, config.iterations + 1):
        try:
            smooth_step(state, problem, component_rngs)
            _, design = match_step(state, problem, match_rng)
        except NumericalError as exc:
            raise NumericalError(f"iteration {it}: {exc}") from exc
        if it % config.thin == 0:
            chains.record(slot, it, state, design, it > config.burn_in)
            slot += 1
    return chains


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    sd: float
    q025: float
    q975: float


def summarize_draws(draws) -> ParamSummary:
    d = np.asarray(draws, dtype=float)
    if d.size == 0:
        raise InvalidInputError("no draws left after burn-in")
    sd = float(np.std(d, ddof=1)) if d.size > 1 else 0.0
    q025, q975 = np.quantile(d, [0.025, 0.975])
    return ParamSummary(float(np.mean(d)), sd, float(q025), float(q975))


def posterior_summary(chains, burn_in: int | None = None) -> dict:
    """Mean, sd and central 95% interval of every scalar chain.

    ``chains`` is a :class:`Chains` or a mapping of name to draws (in which case
    draws are taken to start at iteration 1).
    """
    if isinstance(chains, Chains):
        keep = chains.kept(burn_in)
        return {name: summarize_draws(v[keep]) for name, v in chains.params().items()}
    burn_in = burn_in or 0
    return {name: summarize_draws(np.asarray(v)[burn_in:]) for name, v in chains.items()}
