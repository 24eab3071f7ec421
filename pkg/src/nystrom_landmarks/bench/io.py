"""Serialization: CSV tables, JSON sidecars and point-cloud ingestion.

Every float is written with 17 significant digits so outputs round-trip
exactly and identical runs produce identical bytes.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..exceptions import ConfigError
from ..kernels import PointCloud


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_cell(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits; NaN/inf become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return "null" if not math.isfinite(obj) else fmt_float(obj)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(path, obj):
    Path(path).write_text(to_json(obj) + "\n")


def load_points_csv(path, header: bool = False, tag_column: bool = False) -> PointCloud:
    """Read one point per row; a trailing tag column is split off.

    With ``header=True`` the first line is skipped, and a last header
    field named ``tag`` marks a tag column as well.
    """
    path = Path(path)
    try:
        with path.open() as fh:
            first = fh.readline()
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read points from {path}: {exc}") from None
    if header and first.strip().split(",")[-1].strip().lower() == "tag":
        tag_column = True
    if tag_column:
        if data.shape[1] < 2:
            raise ConfigError("a tag column needs at least one coordinate column")
        return PointCloud(data[:, :-1], data[:, -1])
    return PointCloud(data)
