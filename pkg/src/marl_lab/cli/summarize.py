"""Cross-run aggregation: method comparison table with confidence bands.

Every number is recomputed from the runs' metrics.csv files; snapshots are
only consulted for grouping and consistency."""

from __future__ import annotations

import os

import numpy as np

from ..training import read_metrics_csv
from .specfile import parse_spec_text

TABLE_COLUMNS = ["method", "runs", "mean_collective_reward", "variance",
                 "ci_low", "ci_high", "mean_equality"]


class SummarizeError(ValueError):
    pass


def discover_runs(paths):
    """Collect run directories (holding metrics.csv) under the given paths."""
    runs = []
    for path in paths:
        if os.path.isfile(os.path.join(path, "metrics.csv")):
            runs.append(path)
            continue
        for root, _, files in sorted(os.walk(path)):
            if "metrics.csv" in files:
                runs.append(root)
    if not runs:
        raise SummarizeError(f"no runs found under {list(paths)}")
    return sorted(runs)


def _run_identity(run_dir):
    """(method, consistency key): the snapshot with seeds stripped must agree
    across everything being aggregated."""
    snap_path = os.path.join(run_dir, "snapshot.spec")
    if not os.path.exists(snap_path):
        raise SummarizeError(f"{run_dir}: missing snapshot.spec")
    with open(snap_path, encoding="utf-8") as f:
        text = f.read()
    doc = parse_spec_text(text, path=snap_path)
    method = doc.get("method", {}).get("mode", (None, 0))[0]
    if method is None:
        raise SummarizeError(f"{run_dir}: snapshot lacks a method mode")
    stripped = "\n".join(line for line in text.splitlines()
                         if not line.startswith(("seeds = ", "output_dir = ")))
    return method, stripped


def window_mean(run_dir, last_steps):
    """Mean collective reward and equality over the trailing last_steps
    environment steps of the run's metrics stream."""
    m = read_metrics_csv(os.path.join(run_dir, "metrics.csv"))
    steps = np.asarray(m["env_steps"])
    if steps.size == 0:
        raise SummarizeError(f"{run_dir}: empty metrics stream")
    cutoff = steps.max() - last_steps
    mask = steps > cutoff
    rew = np.asarray(m["collective_reward"])[mask]
    eq = np.asarray(m["equality"])[mask]
    rew = rew[~np.isnan(rew)]
    eq = eq[~np.isnan(eq)]
    if rew.size == 0:
        raise SummarizeError(f"{run_dir}: no completed episodes inside the window")
    return float(rew.mean()), (float(eq.mean()) if eq.size else float("nan"))


def summarize(run_dirs, last_steps, trim=False):
    """Per-method mean, unbiased variance, and a 95% normal confidence band
    over seeds; optional best/worst trimming per method."""
    runs = discover_runs(run_dirs)
    identities = {}
    by_method = {}
    for rd in runs:
        method, ident = _run_identity(rd)
        identities.setdefault(method, ident)
        if identities[method] != ident:
            raise SummarizeError(f"{rd}: snapshot disagrees with other "
                                 f"{method!r} runs; refusing to aggregate")
        by_method.setdefault(method, []).append(rd)

    rows = []
    for method in sorted(by_method):
        values = []
        for rd in by_method[method]:
            rew, eq = window_mean(rd, last_steps)
            values.append((rew, eq))
        values.sort(key=lambda t: t[0])
        if trim:
            if len(values) < 3:
                raise SummarizeError(f"method {method!r}: trimming needs at least "
                                     f"3 runs, have {len(values)}")
            values = values[1:-1]
        rewards = np.array([v[0] for v in values])
        eqs = np.array([v[1] for v in values])
        n = rewards.size
        mean = float(rewards.mean())
        var = float(rewards.var(ddof=1)) if n > 1 else 0.0
        half = 1.96 * float(np.sqrt(var / n)) if n > 1 else 0.0
        rows.append({"method": method, "runs": n,
                     "mean_collective_reward": mean, "variance": var,
                     "ci_low": mean - half, "ci_high": mean + half,
                     "mean_equality": float(np.nanmean(eqs)) if eqs.size else
                     float("nan")})
    return rows


def format_table(rows):
    header = ",".join(TABLE_COLUMNS)
    lines = [header]
    for row in rows:
        lines.append(",".join(
            repr(float(row[c])) if isinstance(row[c], float) else str(row[c])
            for c in TABLE_COLUMNS))
    return "\n".join(lines) + "\n"
