"""Instance-file format: schema, loading, and faithful re-serialization.

Instances are UTF-8 JSON documents.  Numbers may be written as JSON numbers or
as the literals ``"inf"`` / ``"-inf"``.  Unknown keys are rejected everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np

from .errors import InstanceSchemaError
from .extended import INF, NEG_INF
from .functions import (
    AffinePiece,
    AnyFunction,
    ConvexPolyhedralFunction,
    Grid,
    GridFunction,
    PiecewiseMinFunction,
)
from .geometry import Halfspace, Polyhedron

__all__ = [
    "INSTANCE_SCHEMA",
    "InstanceFile",
    "SolverParams",
    "WitnessSpec",
    "load_instance",
    "parse_instance",
    "serialize_instance",
]

_EXT_NUMBER = {
    "oneOf": [
        {"type": "number"},
        {"enum": ["inf", "-inf"]},
    ]
}

_VECTOR = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 1,
    "maxItems": 3,
}

_PIECE = {
    "type": "object",
    "properties": {"slope": _VECTOR, "intercept": {"type": "number"}},
    "required": ["slope", "intercept"],
    "additionalProperties": False,
}

_HALFSPACE = {
    "type": "object",
    "properties": {
        "normal": _VECTOR,
        "offset": {"type": "number"},
        "strict": {"type": "boolean"},
    },
    "required": ["normal", "offset"],
    "additionalProperties": False,
}

_BRANCH = {
    "type": "object",
    "properties": {
        "pieces": {"type": "array", "items": _PIECE, "minItems": 1},
        "halfspaces": {"type": "array", "items": _HALFSPACE},
    },
    "required": ["pieces"],
    "additionalProperties": False,
}

_GRID = {
    "type": "object",
    "properties": {
        "lower": _VECTOR,
        "upper": _VECTOR,
        "nodes": {
            "type": "array",
            "items": {"type": "integer", "minimum": 2},
            "minItems": 1,
            "maxItems": 3,
        },
    },
    "required": ["lower", "upper", "nodes"],
    "additionalProperties": False,
}

_FUNCTION = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "polyhedral"},
                "pieces": {"type": "array", "items": _PIECE, "minItems": 1},
                "halfspaces": {"type": "array", "items": _HALFSPACE},
            },
            "required": ["kind", "pieces"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "piecewise_min"},
                "branches": {"type": "array", "items": _BRANCH, "minItems": 1},
            },
            "required": ["kind", "branches"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "grid_samples"},
                "grid": _GRID,
                "values": {"type": "array", "items": _EXT_NUMBER, "minItems": 1},
            },
            "required": ["kind", "grid", "values"],
            "additionalProperties": False,
        },
    ],
}

_PROBE = {
    "type": "object",
    "properties": {
        "point": _VECTOR,
        "epsilon": {"type": "number", "minimum": 0},
    },
    "required": ["point", "epsilon"],
    "additionalProperties": False,
}

_PARAMS = {
    "type": "object",
    "properties": {
        "splits": {"type": "integer", "minimum": 1},
        "box_radius": {"type": "number", "exclusiveMinimum": 0},
        "directions": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_EXPECTED = {
    "type": "object",
    "properties": {
        "equality": {"type": "boolean"},
        "summ1": {"type": "boolean"},
        "sum1b": {"type": "boolean"},
        "sum1d": {"type": "boolean"},
        "consistent": {"type": "boolean"},
        "decomposition": {"type": "boolean"},
        "value_identity": {"type": "boolean"},
        "bounds_hold": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_WITNESS = {
    "type": "object",
    "properties": {
        "x": _VECTOR,
        "xstar": _VECTOR,
        "rows": {"type": "integer", "minimum": 1, "maximum": 40},
    },
    "required": ["x", "xstar"],
    "additionalProperties": False,
}

_FEASIBLE = {
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "kind": {"const": "polyhedron"},
                "halfspaces": {"type": "array", "items": _HALFSPACE},
            },
            "required": ["kind", "halfspaces"],
            "additionalProperties": False,
        },
        {
            "properties": {
                "kind": {"const": "points"},
                "points": {"type": "array", "items": _VECTOR, "minItems": 1},
            },
            "required": ["kind", "points"],
            "additionalProperties": False,
        },
    ],
}

INSTANCE_SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "f": _FUNCTION,
        "g": _FUNCTION,
        "probes": {"type": "array", "items": _PROBE},
        "params": _PARAMS,
        "expected": _EXPECTED,
        "witness": _WITNESS,
        "feasible": _FEASIBLE,
        "probe_grid": _GRID,
        "dual_grid": _GRID,
    },
    "required": ["name", "f"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class SolverParams:
    splits: int = 32
    box_radius: float = 10.0
    directions: int | None = None
    tolerance: float = 1e-6

    def merged(
        self,
        splits: int | None = None,
        box_radius: float | None = None,
        directions: int | None = None,
        tolerance: float | None = None,
    ) -> "SolverParams":
        return SolverParams(
            splits if splits is not None else self.splits,
            box_radius if box_radius is not None else self.box_radius,
            directions if directions is not None else self.directions,
            tolerance if tolerance is not None else self.tolerance,
        )


@dataclass(frozen=True)
class WitnessSpec:
    x: tuple[float, ...]
    xstar: tuple[float, ...]
    rows: int = 12


@dataclass(frozen=True)
class InstanceFile:
    name: str
    f: AnyFunction
    g: AnyFunction | None = None
    probes: tuple[tuple[tuple[float, ...], float], ...] = ()
    params: SolverParams = field(default_factory=SolverParams)
    expected: Mapping[str, bool] | None = None
    witness: WitnessSpec | None = None
    feasible: Polyhedron | tuple[tuple[float, ...], ...] | None = None
    probe_grid: Grid | None = None
    dual_grid: Grid | None = None


def _num(v: Any) -> float:
    if v == "inf":
        return INF
    if v == "-inf":
        return NEG_INF
    return float(v)


def _emit_num(v: float) -> Any:
    if v == INF:
        return "inf"
    if v == NEG_INF:
        return "-inf"
    if math.isnan(v):
        raise ValueError("NaN cannot be serialized")
    return float(v)


def _parse_halfspace(data: Mapping[str, Any]) -> Halfspace:
    return Halfspace(
        tuple(float(v) for v in data["normal"]),
        float(data["offset"]),
        bool(data.get("strict", False)),
    )


def _parse_branch(data: Mapping[str, Any], dim: int | None = None) -> ConvexPolyhedralFunction:
    pieces = tuple(
        AffinePiece(tuple(float(v) for v in p["slope"]), float(p["intercept"]))
        for p in data["pieces"]
    )
    d = dim if dim is not None else len(pieces[0].slope)
    dom = Polyhedron(
        d, tuple(_parse_halfspace(h) for h in data.get("halfspaces", ()))
    )
    return ConvexPolyhedralFunction(pieces, dom)


def _parse_grid(data: Mapping[str, Any]) -> Grid:
    return Grid(
        tuple(float(v) for v in data["lower"]),
        tuple(float(v) for v in data["upper"]),
        tuple(int(v) for v in data["nodes"]),
    )


def _parse_function(data: Mapping[str, Any]) -> AnyFunction:
    kind = data["kind"]
    if kind == "polyhedral":
        return _parse_branch(data)
    if kind == "piecewise_min":
        branches = tuple(_parse_branch(b) for b in data["branches"])
        return PiecewiseMinFunction(branches)
    assert kind == "grid_samples"
    grid = _parse_grid(data["grid"])
    values = [_num(v) for v in data["values"]]
    expected_len = math.prod(grid.nodes)
    if len(values) != expected_len:
        raise InstanceSchemaError(
            f"grid_samples values length {len(values)} != node count {expected_len}"
        )
    return GridFunction(grid, np.asarray(values, dtype=float).reshape(grid.nodes))


def _parse_feasible(
    data: Mapping[str, Any],
) -> Polyhedron | tuple[tuple[float, ...], ...]:
    if data["kind"] == "polyhedron":
        rows = tuple(_parse_halfspace(h) for h in data["halfspaces"])
        if not rows:
            raise InstanceSchemaError("a feasible polyhedron needs at least one halfspace")
        return Polyhedron(len(rows[0].normal), rows)
    return tuple(tuple(float(v) for v in p) for p in data["points"])


def parse_instance(data: Mapping[str, Any]) -> InstanceFile:
    """Validate a decoded document against the schema and build the instance."""
    try:
        jsonschema.validate(data, INSTANCE_SCHEMA)
    except jsonschema.ValidationError as err:
        path = "$" + "".join(
            f"[{p!r}]" if isinstance(p, str) else f"[{p}]" for p in err.absolute_path
        )
        raise InstanceSchemaError(f"{path}: {err.message}") from err
    params_data = data.get("params", {})
    witness_data = data.get("witness")
    return InstanceFile(
        name=data["name"],
        f=_parse_function(data["f"]),
        g=_parse_function(data["g"]) if "g" in data else None,
        probes=tuple(
            (tuple(float(v) for v in p["point"]), float(p["epsilon"]))
            for p in data.get("probes", ())
        ),
        params=SolverParams(
            splits=int(params_data.get("splits", 32)),
            box_radius=float(params_data.get("box_radius", 10.0)),
            directions=(
                int(params_data["directions"]) if "directions" in params_data else None
            ),
            tolerance=float(params_data.get("tolerance", 1e-6)),
        ),
        expected=(dict(data["expected"]) if "expected" in data else None),
        witness=(
            WitnessSpec(
                tuple(float(v) for v in witness_data["x"]),
                tuple(float(v) for v in witness_data["xstar"]),
                int(witness_data.get("rows", 12)),
            )
            if witness_data is not None
            else None
        ),
        feasible=(_parse_feasible(data["feasible"]) if "feasible" in data else None),
        probe_grid=(_parse_grid(data["probe_grid"]) if "probe_grid" in data else None),
        dual_grid=(_parse_grid(data["dual_grid"]) if "dual_grid" in data else None),
    )


def load_instance(path: str | Path) -> InstanceFile:
    """Read, schema-validate, and construct an instance from a JSON file.

    Raises InstanceSchemaError with position diagnostics for both syntactic
    and schema-level violations.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise InstanceSchemaError(
            f"line {err.lineno}, column {err.colno}: {err.msg}"
        ) from err
    if not isinstance(data, dict):
        raise InstanceSchemaError("the top-level value must be an object")
    return parse_instance(data)


def _emit_halfspace(h: Halfspace) -> dict[str, Any]:
    out: dict[str, Any] = {
        "normal": [float(v) for v in h.normal],
        "offset": float(h.offset),
    }
    if h.strict:
        out["strict"] = True
    return out


def _emit_branch(f: ConvexPolyhedralFunction) -> dict[str, Any]:
    out: dict[str, Any] = {
        "pieces": [
            {"slope": [float(v) for v in p.slope], "intercept": float(p.intercept)}
            for p in f.pieces
        ]
    }
    if f.domain.halfspaces:
        out["halfspaces"] = [_emit_halfspace(h) for h in f.domain.halfspaces]
    return out


def _emit_grid(grid: Grid) -> dict[str, Any]:
    return {
        "lower": [float(v) for v in grid.lower],
        "upper": [float(v) for v in grid.upper],
        "nodes": [int(v) for v in grid.nodes],
    }


def _emit_function(f: AnyFunction) -> dict[str, Any]:
    if isinstance(f, ConvexPolyhedralFunction):
        return {"kind": "polyhedral", **_emit_branch(f)}
    if isinstance(f, PiecewiseMinFunction):
        return {"kind": "piecewise_min", "branches": [_emit_branch(b) for b in f.branches]}
    assert isinstance(f, GridFunction)
    return {
        "kind": "grid_samples",
        "grid": _emit_grid(f.grid),
        "values": [_emit_num(float(v)) for v in f.values.ravel()],
    }


def serialize_instance(inst: InstanceFile) -> dict[str, Any]:
    """Emit the document form; parse_instance(serialize_instance(i)) == i."""
    out: dict[str, Any] = {"name": inst.name, "f": _emit_function(inst.f)}
    if inst.g is not None:
        out["g"] = _emit_function(inst.g)
    if inst.probes:
        out["probes"] = [
            {"point": [float(v) for v in pt], "epsilon": float(eps)}
            for pt, eps in inst.probes
        ]
    params: dict[str, Any] = {
        "splits": inst.params.splits,
        "box_radius": inst.params.box_radius,
        "tolerance": inst.params.tolerance,
    }
    if inst.params.directions is not None:
        params["directions"] = inst.params.directions
    out["params"] = params
    if inst.expected is not None:
        out["expected"] = dict(inst.expected)
    if inst.witness is not None:
        out["witness"] = {
            "x": [float(v) for v in inst.witness.x],
            "xstar": [float(v) for v in inst.witness.xstar],
            "rows": inst.witness.rows,
        }
    if inst.feasible is not None:
        if isinstance(inst.feasible, Polyhedron):
            out["feasible"] = {
                "kind": "polyhedron",
                "halfspaces": [_emit_halfspace(h) for h in inst.feasible.halfspaces],
            }
        else:
            out["feasible"] = {
                "kind": "points",
                "points": [[float(v) for v in p] for p in inst.feasible],
            }
    if inst.probe_grid is not None:
        out["probe_grid"] = _emit_grid(inst.probe_grid)
    if inst.dual_grid is not None:
        out["dual_grid"] = _emit_grid(inst.dual_grid)
    return out
