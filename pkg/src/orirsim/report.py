"""Flat-file outputs: fixed-format CSV tables and a validated metrics JSON."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping

import jsonschema
import numpy as np

from . import __version__

FLOAT_FMT = "%.11e"  # 12 significant digits

METRICS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["tool", "version", "scenario", "metrics", "integrator", "files"],
    "additionalProperties": False,
    "properties": {
        "tool": {"const": "orirsim"},
        "version": {"type": "string"},
        "scenario": {"type": "object"},
        "metrics": {
            "type": "object",
            "additionalProperties": {"type": "number"},
        },
        "integrator": {
            "type": "object",
            "required": ["rtol", "atol"],
            "properties": {
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "files": {"type": "array", "items": {"type": "string"}},
    },
}


def _cell(x) -> str:
    if isinstance(x, (str, bytes)):
        return str(x)
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return FLOAT_FMT % float(x)


def format_csv(columns: Mapping[str, np.ndarray]) -> str:
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    lengths = {d.shape[0] for d in data}
    if len(lengths) != 1:
        raise ValueError(f"columns have different lengths: { {n: d.shape[0] for n, d in zip(names, data)} }")
    lines = [",".join(names)]
    for row in zip(*data):
        lines.append(",".join(_cell(x) for x in row))
    return "\n".join(lines) + "\n"


def write_table(path: Path, columns: Mapping[str, np.ndarray], fmt: str = "csv") -> Path:
    """Write one curve as CSV, or as JSON ``{column: [values]}`` when ``fmt == 'json'``."""
    path = Path(path)
    if fmt == "csv":
        path = path.with_suffix(".csv")
        path.write_text(format_csv(columns), encoding="utf-8")
    elif fmt == "json":
        path = path.with_suffix(".json")
        payload = {k: [float(FLOAT_FMT % v) if np.isfinite(v) else None for v in np.asarray(c, float)]
                   for k, c in columns.items()}
        path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    return path


def build_metrics(scenario: Mapping, metrics: Mapping[str, float], rtol: float, atol: float,
                  files=()) -> dict:
    clean = {}
    for k, v in metrics.items():
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"metric {k!r} is not finite ({v})")
        clean[k] = v
    doc = {
        "tool": "orirsim",
        "version": __version__,
        "scenario": json.loads(json.dumps(dict(scenario), default=_jsonable)),
        "metrics": clean,
        "integrator": {"rtol": float(rtol), "atol": float(atol)},
        "files": sorted(str(f) for f in files),
    }
    validate_metrics(doc)
    return doc


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Path):
        return str(x)
    return str(x)


def validate_metrics(doc: Mapping) -> None:
    jsonschema.validate(doc, METRICS_SCHEMA)


def write_metrics(path: Path, doc: Mapping) -> Path:
    path = Path(path)
    validate_metrics(doc)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")
    return path


def read_metrics(path: Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    validate_metrics(doc)
    return doc
