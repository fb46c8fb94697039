"""Result persistence: CSV tables, legacy VTK structured points, JSON manifests.

Numbers are written with ``%.17g`` so identical runs give byte-identical
files and values round-trip exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["format_number", "write_csv", "write_vtk_structured_points", "write_manifest",
           "read_manifest"]


def format_number(v) -> str:
    if isinstance(v, (str, bytes)):
        return v if isinstance(v, str) else v.decode()
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path, header, rows) -> Path:
    """Write ``rows`` (iterable of sequences) under a comma-separated header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row has %d entries, header %d" % (len(row), len(header)))
        lines.append(",".join(format_number(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_vtk_structured_points(path, title: str, dims, origin, spacing,
                                scalars=None, vectors=None) -> Path:
    """ASCII legacy VTK file on a uniform grid.

    Parameters
    ----------
    dims : sequence of int
        Points per direction (padded to three entries with 1).
    scalars, vectors : dict
        Name to array.  Arrays are flattened with x varying fastest, so pass
        grids indexed ``[iy, ix]`` or already flattened in that order.
        Vector arrays have a trailing axis of length 2 or 3.
    """
    dims = list(dims) + [1] * (3 - len(dims))
    origin = list(origin) + [0.0] * (3 - len(origin))
    spacing = list(spacing) + [1.0] * (3 - len(spacing))
    npts = int(np.prod(dims))
    out = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
           "DATASET STRUCTURED_POINTS",
           "DIMENSIONS %d %d %d" % tuple(dims),
           "ORIGIN %s" % " ".join(format_number(v) for v in origin),
           "SPACING %s" % " ".join(format_number(v) for v in spacing),
           "POINT_DATA %d" % npts]
    for name, arr in (vectors or {}).items():
        a = np.asarray(arr, dtype=float).reshape(npts, -1)
        if a.shape[1] == 2:
            a = np.column_stack([a, np.zeros(npts)])
        out.append("VECTORS %s double" % name)
        out.extend(" ".join(format_number(v) for v in r) for r in a)
    for name, arr in (scalars or {}).items():
        a = np.asarray(arr, dtype=float).reshape(npts)
        out.append("SCALARS %s double 1" % name)
        out.append("LOOKUP_TABLE default")
        out.extend(format_number(v) for v in a)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
