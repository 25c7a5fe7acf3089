"""Command-line front end: ``simulate``, ``fit``, ``scenario`` and ``summarize``.

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import csvio
from .config import KEYS, build_run_config, load_config_file
from .engine import posterior_summary, run_chain
from .errors import InvalidInputError, NumericalError, SnmError
from .experiments import run_scenario
from .systems import get_system, inject_noise, rk4_solve

log = logging.getLogger("smoothmatch")

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


def _add_run_options(p):
    p.add_argument("--config", help="key = value configuration file")
    for key in KEYS:
        p.add_argument("--" + key.replace("_", "-"), dest=key, metavar="VALUE")
    p.add_argument("--sim", action="append", default=[], metavar="NAME=VALUE",
                   help="simulation parameter, repeatable")


def _run_config(args):
    raw = load_config_file(args.config) if args.config else {}
    for key in KEYS:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    for item in args.sim:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise InvalidInputError(f"--sim expects NAME=VALUE, got {item!r}")
        raw["sim." + name.strip()] = value.strip()
    return build_run_config(raw).resolved()


def _outdir(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def cmd_simulate(cfg):
    spec = get_system(cfg.system, **cfg.sim)
    scenario = cfg.scenario()
    times = scenario.times()
    trajectory = rk4_solve(spec, spec.initial_state(), times, substeps=cfg.substeps)
    data = inject_noise(trajectory, times, cfg.noise_mode, cfg.noise_level, np.random.default_rng(cfg.seed))
    out = _outdir(cfg)
    csvio.write_dataset(os.path.join(out, "data.csv"), data)
    csvio.write_dataset(os.path.join(out, "truth.csv"), data, values=data.truth)
    meta = {
        "system": cfg.system,
        "params": spec.sim_params,
        "n": int(times.size),
        "noise_mode": cfg.noise_mode,
        "noise_level": cfg.noise_level,
        "noise_sd": [float(v) for v in data.noise_sd],
        "seed": cfg.seed,
    }
    with open(os.path.join(out, "metadata.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return data


def cmd_fit(cfg, data_path, truth_path=None):
    data = csvio.read_dataset(data_path, truth_path)
    spec = get_system(cfg.system, **cfg.sim)
    chains = run_chain(data, spec, cfg.fit_config())
    out = _outdir(cfg)
    csvio.write_chains(os.path.join(out, "chains.csv"), chains)
    summary = posterior_summary(chains)
    csvio.write_summary(os.path.join(out, "summary.csv"), summary)
    k = spec.target
    truth = data.truth[:, k] if data.truth is not None else None
    csvio.write_curves(os.path.join(out, "curves.csv"), data.times,
                       chains.smoothed(k), chains.reconstructed_curve(), truth)
    return summary


def cmd_scenario(cfg):
    summary = run_scenario(cfg.scenario(), threads=cfg.threads)
    out = _outdir(cfg)
    csvio.write_scenario_summary(os.path.join(out, "scenario_summary.csv"), summary)
    csvio.write_replicates(os.path.join(out, "replicates.csv"), summary)
    return summary


def cmd_summarize(chains_path, burn_in, output):
    table = csvio.read_chains(chains_path)
    summary = csvio.summarize_chain_table(table, burn_in)
    csvio.write_summary(output, summary)
    return summary


def build_parser():
    parser = argparse.ArgumentParser(prog="smoothmatch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a noisy dataset (data.csv, truth.csv, metadata.json)")
    _add_run_options(p)

    p = sub.add_parser("fit", help="fit one dataset (chains.csv, summary.csv, curves.csv)")
    p.add_argument("data")
    p.add_argument("--truth", help="noise-free trajectory CSV for the curves file")
    _add_run_options(p)

    p = sub.add_parser("scenario", help="replicated study (scenario_summary.csv, replicates.csv)")
    _add_run_options(p)

    p = sub.add_parser("summarize", help="posterior summary from a chains.csv")
    p.add_argument("chains")
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--output", default="summary.csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "summarize":
            cmd_summarize(args.chains, args.burn_in, args.output)
            return EXIT_OK
        cfg = _run_config(args)
        if args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "fit":
            cmd_fit(cfg, args.data, args.truth)
        else:
            cmd_scenario(cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SnmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
