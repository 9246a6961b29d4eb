"""CSV panels and JSON documents on disk.

Panels are comma-separated with one header row (``x1..xp`` or ``z1..zp``),
rows in time order and no index column. Values are written with 17
significant digits so a round trip reproduces every float exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidArgument

FLOAT_FORMAT = "{:.17g}"


def write_panel_csv(path, panel, prefix):
    panel = np.atleast_2d(np.asarray(panel, dtype=float))
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{prefix}{j + 1}" for j in range(panel.shape[1])])
        for row in panel:
            w.writerow([FLOAT_FORMAT.format(v) for v in row])


def read_panel_csv(path):
    """Read a panel written by :func:`write_panel_csv` (or any headed numeric CSV)."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InvalidArgument(f"cannot read {path}: {exc.strerror or exc}") from None
    if len(rows) < 2:
        raise InvalidArgument(f"{path}: need a header row and at least one data row")
    width = len(rows[0])
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise InvalidArgument(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError:
            raise InvalidArgument(f"{path}:{lineno}: non-numeric value") from None
    arr = np.array(data, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{path}: panel contains NaN or infinite values")
    return arr


def difference(panel, kind):
    """First differences (``abs``) or relative changes (``rel``) along time."""
    panel = np.asarray(panel, dtype=float)
    if kind in (None, "none"):
        return panel
    if kind == "abs":
        return np.diff(panel, axis=0)
    if kind == "rel":
        prev = panel[:-1]
        if np.any(prev == 0):
            raise InvalidArgument("relative differencing hits a zero value")
        return panel[1:] / prev - 1.0
    raise InvalidArgument(f"unknown differencing {kind!r}; use abs or rel")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, payload):
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidArgument(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from None


def write_rows_csv(path, header, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([FLOAT_FORMAT.format(v) if isinstance(v, float) else v for v in row])
