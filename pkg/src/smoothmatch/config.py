"""Flat ``key = value`` run configuration.

Grammar, one entry per line::

    # comment (also allowed after a value)
    key = value
    knots = 5, 5          # lists are comma separated
    sim.beta3 = -0.3      # simulation parameters use the ``sim.`` prefix

Keys are case-sensitive; unknown keys and repeated keys are errors.
"""
from __future__ import annotations

import os
import re
import secrets
from dataclasses import dataclass, field, fields

from .engine import FitConfig, HyperParams
from .errors import ConfigurationError
from .experiments import Scenario


def _floats(text):
    vals = tuple(float(v) for v in text.split(","))
    return vals[0] if len(vals) == 1 else vals


def _ints(text):
    return tuple(int(v) for v in text.split(","))


def _opt_float(text):
    return float(text)


# key -> parser; every key is also a --flag on the command line
KEYS = {
    "system": str,
    "n": int,
    "grid": str,
    "t_start": _opt_float,
    "t_stop": _opt_float,
    "noise_mode": str,
    "noise_level": _floats,
    "replicates": int,
    "iterations": int,
    "burn_in": int,
    "thin": int,
    "knots": _ints,
    "refine": int,
    "init": str,
    "alpha_theta": _floats,
    "gamma_theta": _floats,
    "alpha_beta": float,
    "gamma_beta": float,
    "seed": int,
    "threads": int,
    "out": str,
    "substeps": int,
}

SYSTEM_DEFAULTS = {
    "logistic": {"grid": "unit_interval", "n": 100, "noise_mode": "snr", "noise_level": 13.0},
    "lotka_volterra": {"grid": "lv_25", "noise_mode": "snr", "noise_level": 13.0},
    "hiv": {"grid": "lv_25", "noise_mode": "snr", "noise_level": 13.0},
    "fitzhugh_nagumo": {"grid": "span", "n": 41, "t_start": 0.0, "t_stop": 20.0,
                        "noise_mode": "sd", "noise_level": 0.5},
}

_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_.]*)\s*=\s*(.*)$")


@dataclass
class RunConfig:
    system: str = "logistic"
    n: int | None = None
    grid: str | None = None
    t_start: float | None = None
    t_stop: float | None = None
    noise_mode: str | None = None
    noise_level: float | tuple | None = None
    replicates: int = 100
    iterations: int = 10000
    burn_in: int = 5000
    thin: int = 1
    knots: tuple | None = None
    refine: int = 1
    init: str = "gcv"
    alpha_theta: float | tuple = 0.01
    gamma_theta: float | tuple = 0.01
    alpha_beta: float = 0.01
    gamma_beta: float = 0.01
    seed: int | None = None
    threads: int | None = None
    out: str = "."
    substeps: int = 20
    sim: dict = field(default_factory=dict)

    def resolved(self) -> "RunConfig":
        """Copy with system defaults, seed fallback and thread count filled in."""
        if self.system not in SYSTEM_DEFAULTS:
            raise ConfigurationError(f"unknown system {self.system!r}; choose from {sorted(SYSTEM_DEFAULTS)}")
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for k, v in SYSTEM_DEFAULTS[self.system].items():
            if values[k] is None:
                values[k] = v
        if values["seed"] is None:
            env = os.environ.get("SNM_SEED")
            if env is not None:
                try:
                    values["seed"] = int(env)
                except ValueError:
                    raise ConfigurationError(f"SNM_SEED must be an integer, got {env!r}") from None
            else:
                values["seed"] = secrets.randbits(63)
        if values["threads"] is None:
            values["threads"] = os.cpu_count() or 1
        if values["threads"] < 1:
            raise ConfigurationError("threads must be at least 1")
        return RunConfig(**values)

    def fit_config(self, seed=None) -> FitConfig:
        return FitConfig(
            iterations=self.iterations,
            burn_in=self.burn_in,
            thin=self.thin,
            knots=self.knots,
            hyper=HyperParams(self.alpha_theta, self.gamma_theta, self.alpha_beta, self.gamma_beta),
            refine=self.refine,
            seed=self.seed if seed is None else seed,
            init=self.init,
        )

    def scenario(self) -> Scenario:
        return Scenario(
            system=self.system,
            n=self.n,
            grid=self.grid,
            t_start=self.t_start,
            t_stop=self.t_stop,
            noise_mode=self.noise_mode,
            noise_level=self.noise_level,
            replicates=self.replicates,
            fit=self.fit_config(),
            seed=self.seed,
            sim_params=dict(self.sim),
            substeps=self.substeps,
        )


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Raw ``key -> value string`` map; ``sim.<name>`` keys stay prefixed."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = m.group(1), m.group(2).strip()
        if key not in KEYS and not key.startswith("sim."):
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigurationError(f"{source}:{lineno}: key {key!r} given twice")
        if value == "":
            raise ConfigurationError(f"{source}:{lineno}: key {key!r} has no value")
        out[key] = value
    return out


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read(), str(path))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None


def build_run_config(raw: dict) -> RunConfig:
    """Typed config from raw strings (later sources should already be merged in)."""
    kwargs, sim = {}, {}
    for key, value in raw.items():
        if key.startswith("sim."):
            name = key[4:]
            try:
                sim[name] = float(value)
            except ValueError:
                raise ConfigurationError(f"{key}: {value!r} is not a number") from None
            continue
        if key not in KEYS:
            raise ConfigurationError(f"unknown key {key!r}")
        try:
            kwargs[key] = KEYS[key](value)
        except ValueError:
            raise ConfigurationError(f"{key}: cannot parse {value!r}") from None
    return RunConfig(sim=sim, **kwargs)
