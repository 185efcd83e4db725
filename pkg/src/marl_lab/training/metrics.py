"""Metrics streams: one CSV row per update, JSON-lines for events.

CSV writing is fully deterministic: fixed column order, floats rendered with
repr (shortest round-trip form), '.' decimal separator, no locale influence.
"""

from __future__ import annotations

import json

METRIC_COLUMNS = [
    "update", "env_steps", "episodes_completed", "collective_reward", "equality",
    "policy_loss", "value_loss", "entropy", "moa_loss", "forward_loss",
    "inverse_loss", "intrinsic_mean", "impact_mean", "impact_min", "impact_max",
    "grad_norm",
]


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))   # plain-float repr even for numpy scalars
    return str(v)


class MetricsWriter:
    def __init__(self, path):
        self.path = path
        self._f = open(path, "w", encoding="utf-8", newline="\n")
        self._f.write(",".join(METRIC_COLUMNS) + "\n")

    def write_row(self, row: dict):
        missing = set(METRIC_COLUMNS) - set(row)
        if missing:
            raise KeyError(f"metrics row missing columns: {sorted(missing)}")
        self._f.write(",".join(format_value(row[c]) for c in METRIC_COLUMNS) + "\n")
        self._f.flush()

    def close(self):
        self._f.close()


class EventLog:
    def __init__(self, path):
        self.path = path
        self._f = open(path, "w", encoding="utf-8", newline="\n")

    def write(self, kind, **fields):
        rec = {"event": kind}
        rec.update(fields)
        self._f.write(json.dumps(rec, sort_keys=True) + "\n")
        self._f.flush()

    def close(self):
        self._f.close()


def read_metrics_csv(path):
    """Parse a metrics CSV back into {column: list of floats/ints}."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        rows = {c: [] for c in header}
        for line in f:
            parts = line.strip().split(",")
            if len(parts) != len(header):
                raise ValueError(f"{path}: malformed row {line!r}")
            for c, p in zip(header, parts):
                rows[c].append(float(p) if p != "nan" else float("nan"))
    return rows
