"""File schemas: grid/PL function files, discrete-measure JSON, result JSON.

Grid function files carry a single-line JSON header (domain and shape)
followed by the values as flat CSV with the literal token ``inf`` for +inf.
PL function files and measures are plain JSON documents.
"""

from __future__ import annotations

import json

import numpy as np

from .convex_core import BoxDomain, DiscreteMeasure, GridFunction, PLConvexFunction
from .numerics import INF


class FunctionFormatError(ValueError):
    """Malformed function or measure file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _parse_value_token(tok: str, line: int) -> float:
    tok = tok.strip()
    if tok in ("inf", "+inf", "Infinity", "+Infinity"):
        return INF
    try:
        return float(tok)
    except ValueError as exc:
        raise FunctionFormatError(f"bad value token {tok!r}", line) from exc


def load_function(path: str):
    """Load a grid (JSON header + CSV) or PL (single JSON document) function."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict):
        kind = doc.get("type")
        if kind == "pl":
            return _pl_from_dict(doc)
        if kind == "grid" and "values" in doc:
            vals = np.asarray(doc["values"], dtype=np.float64)
            dom = BoxDomain(np.array(doc["lo"], float), np.array(doc["hi"], float))
            return GridFunction(dom, vals.reshape(tuple(doc["shape"])))
        raise FunctionFormatError(f"unknown function type {kind!r}", 1)
    return _grid_from_text(text)


def _pl_from_dict(doc: dict) -> PLConvexFunction:
    pieces = np.atleast_2d(np.asarray(doc["pieces"], dtype=np.float64))
    slopes, intercepts = pieces[:, :-1], pieces[:, -1]
    hs = doc.get("halfspaces")
    if hs:
        hs = np.atleast_2d(np.asarray(hs, dtype=np.float64))
        return PLConvexFunction(slopes, intercepts, hs[:, :-1], hs[:, -1])
    return PLConvexFunction(slopes, intercepts)


def _grid_from_text(text: str) -> GridFunction:
    lines = text.splitlines()
    if not lines:
        raise FunctionFormatError("empty file", 1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FunctionFormatError(f"header is not valid JSON: {exc}", 1) from exc
    for key in ("lo", "hi", "shape"):
        if key not in header:
            raise FunctionFormatError(f"header misses {key!r}", 1)
    shape = tuple(int(s) for s in header["shape"])
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        values.extend(_parse_value_token(tok, lineno) for tok in line.split(","))
    expected = int(np.prod(shape))
    if len(values) != expected:
        raise FunctionFormatError(
            f"expected {expected} values for shape {shape}, found {len(values)}",
            len(lines),
        )
    dom = BoxDomain(np.array(header["lo"], float), np.array(header["hi"], float))
    return GridFunction(dom, np.array(values).reshape(shape))


def save_function(path: str, f) -> None:
    if isinstance(f, PLConvexFunction):
        doc = {
            "type": "pl",
            "n": f.n,
            "pieces": np.column_stack((f.slopes, f.intercepts)).tolist(),
            "halfspaces": None if f.has_full_domain()
            else np.column_stack((f.normals, f.offsets)).tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
        return
    if isinstance(f, GridFunction):
        header = {
            "type": "grid",
            "n": f.n,
            "lo": f.domain.lo.tolist(),
            "hi": f.domain.hi.tolist(),
            "shape": list(f.shape),
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(header) + "\n")
            flat = f.values.reshape(f.shape[0], -1)
            for row in flat:
                fh.write(",".join("inf" if not np.isfinite(x) else repr(float(x))
                                  for x in row) + "\n")
        return
    raise TypeError(f"cannot save {type(f).__name__}")


def load_measure(path: str) -> DiscreteMeasure:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FunctionFormatError(f"measure file is not valid JSON: {exc}",
                                      exc.lineno) from exc
    for key in ("n", "points", "weights"):
        if key not in doc:
            raise FunctionFormatError(f"measure file misses {key!r}")
    pts = np.atleast_2d(np.asarray(doc["points"], dtype=np.float64))
    if pts.shape[1] != int(doc["n"]):
        raise FunctionFormatError(
            f"points are {pts.shape[1]}-dimensional but n = {doc['n']}")
    return DiscreteMeasure(pts, np.asarray(doc["weights"], dtype=np.float64))


def save_measure(path: str, measure: DiscreteMeasure, total_mass: float | None = None) -> None:
    doc = {
        "n": measure.n,
        "points": measure.points.tolist(),
        "weights": measure.weights.tolist(),
    }
    if total_mass is not None:
        doc["total_mass"] = total_mass
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def save_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def save_residual_history(path: str, history: list) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,residual,objective,step\n")
        for row in history:
            fh.write(f"{row['iteration']},{row['residual']!r},"
                     f"{row['objective']!r},{row['step']!r}\n")
