"""JSON encodings shared by the CLI and report files.

Complex numbers are ``[re, im]`` pairs (a bare real number is also accepted
on input), vectors are lists of complex numbers and matrices are row-major
lists of rows.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

import numpy as np

from .errors import InvalidInput
from .evolution import HamiltonianSpec, TimeGrid, Trajectory
from .histories import HistoryFamily, HistoryProposition
from .state_space import projector

COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
VECTOR = {"type": "array", "items": COMPLEX, "minItems": 1}
MATRIX = {"type": "array", "items": VECTOR, "minItems": 1}

HAMILTONIAN = {
    "type": "object",
    "properties": {
        "dim": {"type": "integer", "minimum": 1},
        "kind": {"enum": ["static", "sampled", "zero"]},
        "matrix": MATRIX,
        "samples": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {"t": {"type": "number"}, "matrix": MATRIX},
                "required": ["t", "matrix"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["dim", "kind"],
    "additionalProperties": False,
    "allOf": [
        {"if": {"properties": {"kind": {"const": "static"}}}, "then": {"required": ["matrix"]}},
        {"if": {"properties": {"kind": {"const": "sampled"}}}, "then": {"required": ["samples"]}},
    ],
}

GRID = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "t0": {"type": "number"},
                "t1": {"type": "number"},
                "steps": {"type": "integer", "minimum": 1},
            },
            "required": ["t0", "t1", "steps"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"times": {"type": "array", "items": {"type": "number"}, "minItems": 2}},
            "required": ["times"],
            "additionalProperties": False,
        },
    ]
}

HISTORY = {
    "type": "object",
    "properties": {
        "label": {"type": "string"},
        "events": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "properties": {"t": {"type": "number"}, "projector": MATRIX},
                        "required": ["t", "projector"],
                        "additionalProperties": False,
                    },
                    {
                        "type": "object",
                        "properties": {"t": {"type": "number"}, "state": VECTOR},
                        "required": ["t", "state"],
                        "additionalProperties": False,
                    },
                ]
            },
        },
    },
    "required": ["events"],
    "additionalProperties": False,
}


def complex_from_json(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    return complex(x[0], x[1])


def complex_to_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def vector_from_json(v) -> np.ndarray:
    return np.array([complex_from_json(x) for x in v], dtype=np.complex128)


def vector_to_json(v) -> list:
    return [complex_to_json(z) for z in np.asarray(v).reshape(-1)]


def matrix_from_json(m) -> np.ndarray:
    rows = [vector_from_json(r) for r in m]
    if len({r.shape for r in rows}) > 1:
        raise InvalidInput("matrix rows have unequal lengths")
    return np.array(rows)


def matrix_to_json(m) -> list:
    return [vector_to_json(row) for row in np.asarray(m)]


def hamiltonian_from_json(obj: dict) -> HamiltonianSpec:
    kind = obj["kind"]
    dim = int(obj["dim"])
    if kind == "zero":
        return HamiltonianSpec.zero(dim)
    if kind == "static":
        return HamiltonianSpec(dim=dim, kind="static", matrix=matrix_from_json(obj["matrix"]))
    samples = obj["samples"]
    return HamiltonianSpec(
        dim=dim,
        kind="sampled",
        sample_times=np.array([s["t"] for s in samples], dtype=float),
        sample_matrices=[matrix_from_json(s["matrix"]) for s in samples],
    )


def hamiltonian_to_json(h: HamiltonianSpec) -> dict:
    out: dict[str, Any] = {"dim": h.dim, "kind": h.kind}
    if h.kind == "static":
        out["matrix"] = matrix_to_json(h.matrix)
    elif h.kind == "sampled":
        out["samples"] = [
            {"t": float(t), "matrix": matrix_to_json(m)} for t, m in zip(h.sample_times, h.sample_matrices)
        ]
    return out


def grid_from_json(obj: dict) -> TimeGrid:
    if "times" in obj:
        return TimeGrid(np.array(obj["times"], dtype=float))
    return TimeGrid.uniform(float(obj["t0"]), float(obj["t1"]), int(obj["steps"]))


def trajectory_to_json(traj: Trajectory) -> dict:
    return {"times": [float(t) for t in traj.times], "states": matrix_to_json(traj.states)}


def trajectory_from_json(obj: dict) -> Trajectory:
    return Trajectory(TimeGrid(np.array(obj["times"], dtype=float)), matrix_from_json(obj["states"]))


def history_from_json(obj: dict) -> HistoryProposition:
    events = []
    for ev in obj["events"]:
        if "state" in ev:
            events.append((ev["t"], projector(vector_from_json(ev["state"]))))
        else:
            events.append((ev["t"], matrix_from_json(ev["projector"])))
    return HistoryProposition(tuple(events), obj.get("label", ""))


def family_from_json(obj: dict) -> HistoryFamily:
    if "decompositions" in obj:
        return HistoryFamily.from_decompositions(
            [(d["t"], [matrix_from_json(p) for p in d["projectors"]]) for d in obj["decompositions"]]
        )
    return HistoryFamily(tuple(history_from_json(m) for m in obj["members"]), obj.get("complete", True))


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x + 0.0 if math.isfinite(x) else None  # + 0.0 folds -0.0
    if isinstance(obj, complex):
        return complex_to_json(obj)
    return obj


def dumps_json(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _flatten(prefix: str, obj, rows: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}.{i}", v, rows)
    else:
        rows.append((prefix, obj))


def dumps_csv(report: dict) -> str:
    """Two-column ``key,value`` CSV with dotted keys; floats in repr form."""
    rows: list = []
    _flatten("", jsonable(report), rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in rows:
        if value is None:
            text = ""
        elif isinstance(value, bool):
            text = "true" if value else "false"
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        writer.writerow([key, text])
    return buf.getvalue()
