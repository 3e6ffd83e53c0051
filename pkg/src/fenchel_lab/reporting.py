"""Deterministic report rendering: machine JSON, human tables, CSV exports.

The machine format is byte-identical across runs of the same inputs: keys are
sorted, separators fixed, timing omitted, and every number is either a plain
float (shortest round-trip repr) or the literal ``"inf"`` / ``"-inf"``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from .functions import (
    AffinePiece,
    ConvexPolyhedralFunction,
    Grid,
    GridFunction,
    PiecewiseMinFunction,
)
from .geometry import Halfspace, Polyhedron
from .instances import _emit_function, _emit_grid

__all__ = [
    "csv_text",
    "human_text",
    "machine_text",
    "to_jsonable",
]


def _float_out(v: float) -> Any:
    if math.isnan(v):
        raise ValueError("NaN has no place in a report")
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    # Kill negative zero so that algebraically equal pipelines emit one byte form.
    return float(v) + 0.0


def to_jsonable(obj: Any) -> Any:
    """Recursively convert report objects to JSON-ready plain data."""
    if obj is None or isinstance(obj, (bool, str, int)):
        return obj
    if isinstance(obj, (float, np.floating)):
        return _float_out(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Enum):
        return obj.name
    if isinstance(obj, Halfspace):
        out: dict[str, Any] = {
            "normal": [to_jsonable(v) for v in obj.normal],
            "offset": to_jsonable(obj.offset),
        }
        if obj.strict:
            out["strict"] = True
        return out
    if isinstance(obj, Polyhedron):
        return {
            "dim": obj.dim,
            "halfspaces": [to_jsonable(h) for h in obj.halfspaces],
        }
    if isinstance(obj, Grid):
        return _emit_grid(obj)
    if isinstance(obj, (ConvexPolyhedralFunction, PiecewiseMinFunction, GridFunction)):
        return _emit_function(obj)
    if isinstance(obj, AffinePiece):
        return {
            "slope": [to_jsonable(v) for v in obj.slope],
            "intercept": to_jsonable(obj.intercept),
        }
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: to_jsonable(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    raise TypeError(f"cannot render {type(obj)!r} into a report")


def machine_text(payload: Mapping[str, Any]) -> str:
    """Canonical single-line-per-document JSON; byte-stable across runs."""
    return json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":")) + "\n"


def _human_lines(value: Any, indent: int, out: list[str], label: str | None) -> None:
    pad = "  " * indent
    prefix = f"{pad}{label}: " if label is not None else pad
    if isinstance(value, Mapping):
        if label is not None:
            out.append(f"{pad}{label}:")
        for k in value:
            _human_lines(value[k], indent + (label is not None), out, str(k))
        return
    if isinstance(value, list):
        if all(not isinstance(v, (Mapping, list)) for v in value):
            out.append(prefix + "[" + ", ".join(_scalar_str(v) for v in value) + "]")
            return
        if label is not None:
            out.append(f"{pad}{label}:")
        for i, v in enumerate(value):
            _human_lines(v, indent + (label is not None), out, f"[{i}]")
        return
    out.append(prefix + _scalar_str(value))


def _scalar_str(v: Any) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def human_text(payload: Mapping[str, Any], wall_time: float | None = None) -> str:
    """Indented key/value rendering of the same payload, plus timing."""
    data = to_jsonable(payload)
    lines: list[str] = []
    _human_lines(data, 0, lines, None)
    if wall_time is not None:
        lines.append(f"wall_time_s: {wall_time:.3f}")
    return "\n".join(lines) + "\n"


def _csv_cell(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        fv = float(v)
        if math.isnan(fv):
            raise ValueError("NaN has no place in a CSV export")
        if fv == math.inf:
            return "inf"
        if fv == -math.inf:
            return "-inf"
        return repr(fv + 0.0)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    text = str(v)
    if "," in text or '"' in text or "\n" in text:
        raise ValueError(f"CSV cells may not contain separators: {text!r}")
    return text


def csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """One header row, comma separator, decimal point, ``inf`` literals."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError("CSV row width differs from the header")
        lines.append(",".join(_csv_cell(v) for v in row))
    return "\n".join(lines) + "\n"
