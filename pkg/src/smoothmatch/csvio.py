"""CSV readers and writers for datasets, chains, summaries and curves.

Floats are written in shortest round-trip form so identical runs give
byte-identical files.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict

import numpy as np

from .engine import Chains, summarize_draws
from .errors import InvalidInputError
from .systems import Dataset


def fmt(x) -> str:
    if x is None:
        return ""
    v = float(x)
    if math.isnan(v):
        return "nan"
    return repr(v)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_dataset(path, dataset: Dataset, values=None, include_truth=False):
    """``t,y1,...,yp`` (plus ``x1,...,xp`` with ``include_truth``)."""
    y = dataset.y if values is None else np.asarray(values, dtype=float)
    p = y.shape[1]
    header = ["t"] + [f"y{k + 1}" for k in range(p)]
    if include_truth:
        if dataset.truth is None:
            raise InvalidInputError("dataset has no truth to write")
        header += [f"x{k + 1}" for k in range(p)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(header)
        for i, t in enumerate(dataset.times):
            row = [fmt(t)] + [fmt(v) for v in y[i]]
            if include_truth:
                row += [fmt(v) for v in dataset.truth[i]]
            w.writerow(row)


def read_table(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from None
    except UnicodeDecodeError:
        raise InvalidInputError(f"{path} is not UTF-8 text") from None
    if not rows:
        raise InvalidInputError(f"{path} is empty")
    return [h.strip() for h in rows[0]], rows[1:]


def _parse_float(text, path, line, col):
    try:
        return float(text)
    except ValueError:
        raise InvalidInputError(f"{path}: row {line}, column {col!r}: {text!r} is not a number") from None


def read_dataset(path, truth_path=None) -> Dataset:
    """Parse a dataset CSV; ``truth_path`` adds the noise-free trajectory.

    Row numbers in error messages count the header as row 1.
    """
    header, rows = read_table(path)
    if not header or header[0] != "t":
        raise InvalidInputError(f"{path}: first column must be 't'")
    ycols = [i for i, h in enumerate(header) if h.startswith("y")]
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    expected_y = [f"y{k + 1}" for k in range(len(ycols))]
    if not ycols or [header[i] for i in ycols] != expected_y:
        raise InvalidInputError(f"{path}: expected columns y1..yp, got {header[1:]}")
    if xcols and len(xcols) != len(ycols):
        raise InvalidInputError(f"{path}: truth columns must match the observed columns")
    unknown = set(range(1, len(header))) - set(ycols) - set(xcols)
    if unknown:
        raise InvalidInputError(f"{path}: unexpected columns {[header[i] for i in sorted(unknown)]}")
    times, y, x = [], [], []
    for line, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InvalidInputError(f"{path}: row {line} has {len(row)} fields, expected {len(header)}")
        vals = [_parse_float(c, path, line, header[j]) for j, c in enumerate(row)]
        if any(not math.isfinite(v) for v in vals):
            raise InvalidInputError(f"{path}: row {line} has a missing or non-finite value")
        if times and vals[0] <= times[-1]:
            raise InvalidInputError(f"{path}: row {line}: times must be strictly increasing")
        times.append(vals[0])
        y.append([vals[i] for i in ycols])
        if xcols:
            x.append([vals[i] for i in xcols])
    if len(times) < 3:
        raise InvalidInputError(f"{path}: at least 3 data rows are required")
    truth = np.array(x) if xcols else None
    if truth_path is not None:
        other = read_dataset(truth_path)
        if other.y.shape != (len(times), len(ycols)) or not np.array_equal(other.times, times):
            raise InvalidInputError(f"{truth_path}: times or shape differ from {path}")
        truth = other.y
    return Dataset(times=np.array(times), y=np.array(y), truth=truth)


def write_chains(path, chains: Chains):
    """Long format ``iter,param,value``, one row per recorded iteration and scalar."""
    params = chains.params()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["iter", "param", "value"])
        for i, it in enumerate(chains.iteration):
            for name, v in params.items():
                w.writerow([int(it), name, fmt(v[i])])


def read_chains(path) -> dict:
    """Map of name to ``(iterations, values)`` arrays, in first-seen order."""
    header, rows = read_table(path)
    if header != ["iter", "param", "value"]:
        raise InvalidInputError(f"{path}: expected header iter,param,value")
    its, vals = defaultdict(list), defaultdict(list)
    for line, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise InvalidInputError(f"{path}: row {line} has {len(row)} fields, expected 3")
        try:
            it = int(row[0])
        except ValueError:
            raise InvalidInputError(f"{path}: row {line}: bad iteration {row[0]!r}") from None
        its[row[1]].append(it)
        vals[row[1]].append(_parse_float(row[2], path, line, "value"))
    return {k: (np.array(its[k]), np.array(vals[k])) for k in its}


def summarize_chain_table(table: dict, burn_in: int) -> dict:
    return {name: summarize_draws(v[it > burn_in]) for name, (it, v) in table.items()}


def write_summary(path, summary: dict):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["param", "mean", "sd", "q025", "q975"])
        for name, s in summary.items():
            w.writerow([name, fmt(s.mean), fmt(s.sd), fmt(s.q025), fmt(s.q975)])


def write_curves(path, times, smoothed, reconstructed, truth=None):
    """``t,truth,smoothed,reconstructed``; the truth column is omitted when unknown."""
    header = ["t"] + (["truth"] if truth is not None else []) + ["smoothed", "reconstructed"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(header)
        for i, t in enumerate(times):
            row = [fmt(t)]
            if truth is not None:
                row.append(fmt(truth[i]))
            w.writerow(row + [fmt(smoothed[i]), fmt(reconstructed[i])])


def write_scenario_summary(path, summary):
    """Table-shaped summary: one row per inferred parameter, then the shared variance and curve MSEs."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["param", "truth", "mean", "mse"])
        for name in summary.names:
            w.writerow([name, fmt(summary.truth[name]), fmt(summary.mean[name]), fmt(summary.mse[name])])
        w.writerow([summary.sigma2_name, "", fmt(summary.sigma2_mean), ""])
        w.writerow(["MSE_x", "", fmt(summary.mse_x), ""])
        w.writerow(["MSE_g", "", fmt(summary.mse_g), ""])
        w.writerow(["replicates_ok", "", summary.n_ok, ""])
        w.writerow(["replicates_failed", "", summary.n_failed, ""])


def write_replicates(path, summary):
    cols = summary.names + [summary.sigma2_name]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["replicate", "seed"] + cols + ["mse_x", "mse_g", "error"])
        for r in summary.replicates:
            vals = [fmt(r.posterior_mean.get(c)) for c in cols]
            w.writerow([r.index, r.seed] + vals + [fmt(r.mse_x), fmt(r.mse_g), r.error or ""])
