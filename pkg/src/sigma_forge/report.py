"""Versioned, deterministic JSON reports."""
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SCHEMA = "report_v1"
RNG_ALGORITHM = "PCG64 (numpy.random.default_rng)"


def _plain(obj):
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    return obj


def _encode(obj):
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return '"nan"'
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        return format(obj, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, list):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    """Sorted keys, floats as %.17g, non-finite floats as strings."""
    return _encode(_plain(obj))


@dataclass
class Report:
    command: str
    inputs: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    convergence: Optional[list] = None

    def metric(self, name, value):
        self.metrics[name] = float(value)
        return value

    def check(self, name, ok):
        self.checks[name] = bool(ok)
        return ok

    @property
    def ok(self):
        return all(self.checks.values())

    def to_dict(self):
        out = {"schema": SCHEMA, "command": self.command, "inputs": self.inputs,
               "metrics": self.metrics, "pass": self.checks}
        if self.convergence is not None:
            out["convergence"] = [[float(h), float(v)] for h, v in self.convergence]
        return out

    def to_json(self):
        return dumps(self.to_dict())
