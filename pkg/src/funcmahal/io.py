"""Curve CSV reading/writing and small file helpers.

The curve format is one header row ``t,<t_1>,...,<t_p>`` followed by one
row per curve ``id,<v_1>,...,<v_p>``, with an optional trailing ``label``
column (announced by a final ``label`` header cell).  Numbers are written
with 17 significant digits so values survive a round trip exactly.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import CurveParseError
from .funcspace import FunctionalSample, Grid

__all__ = [
    "CurveTable",
    "format_number",
    "read_curves",
    "parse_curves",
    "write_curves",
    "curves_to_csv",
    "atomic_write",
]


def format_number(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True, eq=False)
class CurveTable:
    """A parsed curve file.

    ``sample`` lives on [0, 1]; ``axis`` keeps the grid points exactly as
    they appeared in the file (an affine map of ``sample.grid.points``).
    """

    sample: FunctionalSample
    ids: tuple
    axis: np.ndarray

    @property
    def rescaled(self) -> bool:
        return not np.array_equal(self.axis, self.sample.grid.points)


def _parse_float(cell: str, row: int, col: int, what: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise CurveParseError(f"{what} {cell!r} is not a number", row, col) from None
    if not math.isfinite(v):
        raise CurveParseError(f"{what} {cell!r} is not finite", row, col)
    return v


def _parse_label(cell: str, row: int, col: int) -> int:
    try:
        v = float(cell)
    except ValueError:
        raise CurveParseError(f"label {cell!r} is not an integer", row, col) from None
    if not math.isfinite(v) or v != int(v):
        raise CurveParseError(f"label {cell!r} is not an integer", row, col)
    return int(v)


def parse_curves(text: str) -> CurveTable:
    """Parse curve CSV text; errors carry 1-based row and column numbers."""
    rows = [r for r in csv.reader(io.StringIO(text))]
    # ignore fully blank lines but keep physical numbering for messages
    numbered = [(i + 1, r) for i, r in enumerate(rows) if any(c.strip() for c in r)]
    if not numbered:
        raise CurveParseError("input is empty", 1, 1)
    hrow, header = numbered[0]
    header = [c.strip() for c in header]
    if header[0].lower() != "t":
        raise CurveParseError(f"first header cell must be 't', got {header[0]!r}", hrow, 1)
    has_label = header[-1].lower() == "label"
    point_cells = header[1:-1] if has_label else header[1:]
    if len(point_cells) < 2:
        raise CurveParseError("need at least two grid points", hrow, len(header))
    axis = np.array([_parse_float(c, hrow, j + 2, "grid point") for j, c in enumerate(point_cells)])
    if np.any(np.diff(axis) <= 0):
        j = int(np.flatnonzero(np.diff(axis) <= 0)[0]) + 3
        raise CurveParseError("grid points must be strictly increasing", hrow, j)
    p = axis.size
    width = len(header)

    ids, values, labels = [], [], []
    for rnum, r in numbered[1:]:
        r = [c.strip() for c in r]
        if len(r) != width:
            raise CurveParseError(f"expected {width} fields, found {len(r)}", rnum, min(len(r), width) + 1)
        ids.append(r[0])
        values.append([_parse_float(c, rnum, j + 2, "value") for j, c in enumerate(r[1 : p + 1])])
        if has_label:
            labels.append(_parse_label(r[-1], rnum, width))
    if not values:
        raise CurveParseError("no curve rows after the header", hrow + 1, 1)

    lo, hi = axis[0], axis[-1]
    if lo >= 0 and hi <= 1:
        points = axis
    else:
        points = (axis - lo) / (hi - lo)
        points[0], points[-1] = 0.0, 1.0
    grid = Grid.from_points(points)
    sample = FunctionalSample(grid, np.array(values), np.array(labels, int) if has_label else None)
    return CurveTable(sample, tuple(ids), axis)


def read_curves(path) -> CurveTable:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_curves(fh.read())


def curves_to_csv(sample: FunctionalSample, ids: Optional[Sequence] = None, axis=None) -> str:
    """Render a sample in the curve CSV format."""
    axis = sample.grid.points if axis is None else np.asarray(axis, dtype=float)
    if axis.size != sample.grid.size:
        raise ValueError("axis length does not match the grid")
    ids = [str(i) for i in range(sample.n)] if ids is None else [str(i) for i in ids]
    if len(ids) != sample.n:
        raise ValueError("one id per curve is required")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["t"] + [format_number(v) for v in axis]
    if sample.labels is not None:
        head.append("label")
    w.writerow(head)
    for i in range(sample.n):
        row = [ids[i]] + [format_number(v) for v in sample.curves[i]]
        if sample.labels is not None:
            row.append(str(int(sample.labels[i])))
        w.writerow(row)
    return buf.getvalue()


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_curves(path, sample: FunctionalSample, ids=None, axis=None) -> None:
    atomic_write(path, curves_to_csv(sample, ids, axis))
