"""Locale-independent number formatting for machine-readable reports.

Report files carry floats at 10 significant digits so byte-identical
output is reproducible across platforms; checkpoints keep full precision
(Python's shortest round-trip repr) instead.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

SIG_DIGITS = 10


def format_float(value: float) -> str:
    if value != value or math.isinf(value):
        raise ValueError(f"cannot serialize non-finite value {value!r}")
    return f"{value:.{SIG_DIGITS}g}"


def to_precision(obj):
    """Recursively round floats in a JSON-ready structure to 10 sig digits."""
    if isinstance(obj, float):
        return float(format_float(obj))
    if isinstance(obj, dict):
        return {k: to_precision(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_precision(v) for v in obj]
    return obj


def write_report_json(path: str | Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_precision(payload), fh, indent=2)
        fh.write("\n")
