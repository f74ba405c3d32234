"""Check records and deterministic JSON output."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

SCHEMA_VERSION = 1


@dataclass
class Check:
    """Outcome of one numerical property check.

    ``margin`` is positive when the check passes with room to spare; its
    units depend on the check (usually ``threshold - value``).
    """

    name: str
    passed: bool
    value: float = float("nan")
    threshold: float = float("nan")
    margin: float = float("nan")
    details: dict = field(default_factory=dict)

    @classmethod
    def upper_bound(cls, name, value, threshold, **details):
        value = float(value)
        return cls(name, bool(value <= threshold), value, float(threshold),
                   float(threshold - value), details)

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "margin": self.margin,
            "details": self.details,
        }

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: value={self.value:.3e} threshold={self.threshold:.3e}"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Check):
        return _clean(obj.to_dict())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return _Float(x)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


class _Float(float):
    def __repr__(self):
        return format(float(self), ".17g")


def dumps(payload):
    """Serialize with sorted keys and 17 significant digits per float."""
    cleaned = _clean(payload)
    text = _encode(cleaned, 0)
    return text + "\n"


def _encode(obj, level):
    pad = "  " * (level + 1)
    end = "  " * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, _Float):
        return repr(obj)
    return json.dumps(obj)
