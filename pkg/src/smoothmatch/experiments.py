"""Replicated simulation studies: simulate, perturb, fit and aggregate."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import samplers
from .engine import FitConfig, posterior_summary, run_chain
from .errors import InvalidInputError, SnmError
from .systems import get_system, inject_noise, rk4_solve

log = logging.getLogger(__name__)

GRID_KINDS = ("unit_interval", "lv_25", "lv_100", "lv_500", "span")


def time_grid(kind: str, n: int | None = None, start: float | None = None, stop: float | None = None):
    """Observation times for the built-in study designs.

    ``lv_25`` and ``lv_100`` are unit-step grids from 0; ``lv_500`` spans
    [0, 99] with ``n`` evenly spaced points (default 500); ``span`` spans
    ``[start, stop]``.
    """
    if kind == "unit_interval":
        return np.linspace(0.0, 1.0, 100 if n is None else n)
    if kind in ("lv_25", "lv_100"):
        size = 25 if kind == "lv_25" else 100
        if n is not None and n != size:
            raise InvalidInputError(f"grid {kind} has {size} points, not {n}")
        return np.arange(size, dtype=float)
    if kind == "lv_500":
        return np.linspace(0.0, 99.0, 500 if n is None else n)
    if kind == "span":
        if n is None or start is None or stop is None:
            raise InvalidInputError("a span grid needs n, start and stop")
        if not stop > start:
            raise InvalidInputError("span grid needs stop > start")
        return np.linspace(float(start), float(stop), n)
    raise InvalidInputError(f"unknown grid {kind!r}; expected one of {GRID_KINDS}")


@dataclass(frozen=True)
class Scenario:
    system: str
    n: int | None = None
    grid: str = "unit_interval"
    t_start: float | None = None
    t_stop: float | None = None
    noise_mode: str = "snr"
    noise_level: float | tuple = 13.0
    replicates: int = 100
    fit: FitConfig = field(default_factory=FitConfig)
    seed: int = 0
    sim_params: dict = field(default_factory=dict)
    substeps: int = 20

    def __post_init__(self):
        if self.replicates < 1:
            raise InvalidInputError("a scenario needs at least one replicate")

    def times(self):
        return time_grid(self.grid, self.n, self.t_start, self.t_stop)

    def model(self):
        return get_system(self.system, **self.sim_params)


@dataclass
class ReplicateResult:
    index: int
    seed: int
    posterior_mean: dict = field(default_factory=dict)
    mse_x: float = float("nan")
    mse_g: float = float("nan")
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class ScenarioSummary:
    """Averages over the successful replicates.

    ``mean[name]`` is the average posterior mean and ``mse[name]`` the average
    squared distance of the posterior mean from the truth.
    """

    names: list
    truth: dict
    mean: dict
    mse: dict
    sigma2_name: str
    sigma2_mean: float
    mse_x: float
    mse_g: float
    n_ok: int
    n_failed: int
    replicates: list = field(default_factory=list)


def curve_mse(curve, truth) -> float:
    c = np.asarray(curve, dtype=float)
    t = np.asarray(truth, dtype=float)
    if c.shape != t.shape:
        raise InvalidInputError(f"curve shapes differ: {c.shape} vs {t.shape}")
    return float(np.mean((c - t) ** 2))


def replicate_streams(base_seed: int, r: int):
    """Independent noise and fit generators for replicate ``r``."""
    seed = samplers.replicate_seed(base_seed, r)
    noise_ss, fit_ss = np.random.SeedSequence(seed).spawn(2)
    return seed, np.random.default_rng(noise_ss), np.random.default_rng(fit_ss)


def run_replicate(scenario: Scenario, r: int, times=None, trajectory=None, spec=None) -> ReplicateResult:
    spec = spec or scenario.model()
    times = scenario.times() if times is None else times
    if trajectory is None:
        trajectory = rk4_solve(spec, spec.initial_state(), times, substeps=scenario.substeps)
    seed, noise_rng, fit_rng = replicate_streams(scenario.seed, r)
    result = ReplicateResult(index=r, seed=seed)
    try:
        data = inject_noise(trajectory, times, scenario.noise_mode, scenario.noise_level, noise_rng)
        chains = run_chain(data, spec, scenario.fit, rng=fit_rng)
    except SnmError as exc:
        log.warning("replicate %d failed: %s", r, exc)
        result.error = str(exc)
        return result
    summary = posterior_summary(chains)
    result.posterior_mean = {k: v.mean for k, v in summary.items()}
    truth_target = trajectory[:, spec.target]
    result.mse_x = curve_mse(chains.smoothed(spec.target), truth_target)
    result.mse_g = curve_mse(chains.reconstructed_curve(), truth_target)
    return result


def aggregate(replicates, spec) -> ScenarioSummary:
    truth = spec.target_truth()
    names = list(truth)
    sigma2_name = f"sigma2_{spec.target + 1}"
    ok = [r for r in replicates if r.ok]
    if ok:
        means = {k: float(np.mean([r.posterior_mean[k] for r in ok])) for k in names}
        mse = {
            k: (float(np.mean([(r.posterior_mean[k] - truth[k]) ** 2 for r in ok]))
                if truth[k] is not None else float("nan"))
            for k in names
        }
        s2 = float(np.mean([r.posterior_mean[sigma2_name] for r in ok]))
        mse_x = float(np.mean([r.mse_x for r in ok]))
        mse_g = float(np.mean([r.mse_g for r in ok]))
    else:
        nan = float("nan")
        means = {k: nan for k in names}
        mse = {k: nan for k in names}
        s2 = mse_x = mse_g = nan
    return ScenarioSummary(
        names=names, truth=truth, mean=means, mse=mse,
        sigma2_name=sigma2_name, sigma2_mean=s2, mse_x=mse_x, mse_g=mse_g,
        n_ok=len(ok), n_failed=len(replicates) - len(ok), replicates=list(replicates),
    )


def run_scenario(scenario: Scenario, threads: int = 1, indices=None) -> ScenarioSummary:
    """Run every replicate (optionally only ``indices``) and aggregate.

    Replicate ``r`` draws from streams derived from ``(scenario.seed, r)``
    only, so results do not depend on ``threads`` or on which other
    replicates run.
    """
    spec = scenario.model()
    times = scenario.times()
    trajectory = rk4_solve(spec, spec.initial_state(), times, substeps=scenario.substeps)
    indices = range(scenario.replicates) if indices is None else list(indices)

    def one(r):
        return run_replicate(scenario, r, times, trajectory, spec)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, indices))
    else:
        results = [one(r) for r in indices]
    if any(not r.ok for r in results):
        log.warning("%d of %d replicates failed", sum(not r.ok for r in results), len(results))
    return aggregate(results, spec)
