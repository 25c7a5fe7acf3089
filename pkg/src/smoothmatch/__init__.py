"""Bayesian Smooth-and-Match inference for ODEs that are linear in the parameters."""
from .engine import ChainState, Chains, FitConfig, HyperParams, Problem, posterior_summary, run_chain
from .errors import ConfigurationError, DivergenceError, InvalidInputError, NumericalError, SnmError
from .experiments import Scenario, ScenarioSummary, curve_mse, run_scenario, time_grid
from .systems import Dataset, OdeModelSpec, get_system, inject_noise, rk4_solve

__all__ = [
    "ChainState", "Chains", "FitConfig", "HyperParams", "Problem", "posterior_summary", "run_chain",
    "ConfigurationError", "DivergenceError", "InvalidInputError", "NumericalError", "SnmError",
    "Scenario", "ScenarioSummary", "curve_mse", "run_scenario", "time_grid",
    "Dataset", "OdeModelSpec", "get_system", "inject_noise", "rk4_solve",
]
