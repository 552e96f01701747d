"""CSV tables and JSON run manifests.

Floats are written with ``repr`` so that every value round-trips exactly and
identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

MATRIX_CORNER_SEP = "\\"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float data of a numeric CSV table."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    return header, np.array(rows, float).reshape(len(rows), len(header))


def write_matrix_csv(path, row_name: str, col_name: str, row_axis, col_axis, values) -> Path:
    """Matrix with an axis-header row; the corner cell reads ``row\\col``."""
    values = np.asarray(values)
    header = [f"{row_name}{MATRIX_CORNER_SEP}{col_name}"] + [_fmt(float(c)) for c in col_axis]
    rows = ([float(r)] + list(values[i]) for i, r in enumerate(row_axis))
    return write_csv(path, header, rows)


def read_matrix_csv(path):
    """Inverse of :func:`write_matrix_csv`: (row_name, col_name, rows, cols, values)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        body = [row for row in reader if row]
    row_name, col_name = header[0].split(MATRIX_CORNER_SEP, 1)
    cols = np.array([float(c) for c in header[1:]])
    rows = np.array([float(r[0]) for r in body])
    values = np.array([[float(x) for x in r[1:]] for r in body])
    return row_name, col_name, rows, cols, values.reshape(rows.size, cols.size)


def is_matrix_csv(path) -> bool:
    with Path(path).open(encoding="utf-8") as fh:
        first = fh.readline()
    return MATRIX_CORNER_SEP in first.split(",", 1)[0]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, Path):
        return str(v)
    return v


def dump_manifest(manifest: dict) -> str:
    return json.dumps(_jsonable(manifest), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_manifest(manifest), encoding="utf-8")
    return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
