"""Deterministic file output: CSV, JSON, OBJ, polylines, run manifests.

All writers format numbers explicitly and sort JSON keys, so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

_FMT = "%.12g"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _FMT % float(x)
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def write_polyline_csv(path, points) -> Path:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    header = [f"x{i + 1}" for i in range(points.shape[1])]
    return write_csv(path, header, points)


def write_obj(path, vertices, segments=None, faces=None) -> Path:
    """Wavefront OBJ with optional line segments or triangular faces."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    lines = []
    for v in vertices:
        coords = list(v) + [0.0] * (3 - len(v))
        lines.append("v " + " ".join(_FMT % c for c in coords[:3]))
    if segments is not None:
        for a, b in segments:
            lines.append(f"l {int(a) + 1} {int(b) + 1}")
    if faces is not None:
        for tri in faces:
            lines.append("f " + " ".join(str(int(i) + 1) for i in tri))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_manifest(path, command: str, feature: str, config: dict, seed: int,
                   outputs, extra: dict | None = None) -> Path:
    doc = {
        "command": command,
        "feature": feature,
        "config": _jsonable(config),
        "seed": int(seed),
        "outputs": sorted(str(o) for o in outputs),
    }
    if extra:
        doc.update(_jsonable(extra))
    return write_json(path, doc)
