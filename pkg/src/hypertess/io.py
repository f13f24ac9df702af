"""Deterministic JSON/CSV output and configuration loading."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .configuration import Configuration

__all__ = ["RunConfig", "to_jsonable", "dumps", "write_json", "write_csv", "read_configuration", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    """Resolved settings of one CLI run, embedded in every JSON output."""

    command: str
    seed: int | None = None
    d: int | None = None
    s: float | None = None
    lam: float | None = None
    window_radius: float | None = None
    separation: float | None = None
    outputs: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    version: str = ""

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


def to_jsonable(obj):
    """Convert numpy scalars/arrays and sets to plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(to_jsonable(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, Configuration):
        return obj.to_dict()
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return v


def write_csv(path, rows, columns) -> None:
    """Write dict rows with a header; floats use repr for round-trip stability."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def read_configuration(path) -> Configuration:
    """Load a configuration JSON, either bare or nested under "configuration"."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if "configuration" in data:
        data = data["configuration"]
    return Configuration.from_dict(data)
