"""CSV ingestion and export for point tables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import CSVParseError

NORMAL, OUTLIER = 0, 1
_LABEL_WORDS = {"0": NORMAL, "normal": NORMAL, "1": OUTLIER, "outlier": OUTLIER}


@dataclass(frozen=True)
class Dataset:
    """An n x p table of finite reals, optionally with 0/1 labels (1 = outlier)."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    columns: Optional[tuple] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must form a 2-D table")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=int)
            if lab.shape != (pts.shape[0],):
                raise ValueError("need exactly one label per row")
            if not np.isin(lab, (NORMAL, OUTLIER)).all():
                raise ValueError("labels must be 0 (normal) or 1 (outlier)")
            object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]

    def subset(self, idx) -> "Dataset":
        lab = None if self.labels is None else self.labels[idx]
        return Dataset(self.points[idx], lab, self.columns)


def ingest_csv(path, has_header: bool = False, label_column=None) -> Dataset:
    """Read a comma-separated numeric table.

    Parameters
    ----------
    path : str or path-like
    has_header : bool
        Treat line 1 as column names.
    label_column : int or str, optional
        Column (index, or name when there is a header) holding labels
        ``0``/``normal`` or ``1``/``outlier``.

    Raises
    ------
    CSVParseError
        Empty file, ragged rows, non-numeric or non-finite cells; the message
        and the ``line`` attribute give the 1-based line number.
    """
    with open(path, newline="") as fh:
        rows = [(i, row) for i, row in enumerate(csv.reader(fh), start=1)
                if row and any(cell.strip() for cell in row)]
    if not rows:
        raise CSVParseError(f"{path}: file is empty", line=1)
    names = None
    if has_header:
        _, head = rows[0]
        names = tuple(c.strip() for c in head)
        rows = rows[1:]
        if not rows:
            raise CSVParseError(f"{path}: header but no data rows", line=2)
    width = len(rows[0][1])
    lab_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if names is None or label_column not in names:
                raise CSVParseError(f"{path}: no column named {label_column!r}", line=1)
            lab_idx = names.index(label_column)
        else:
            lab_idx = int(label_column) % width
    values, labels = [], []
    for line, row in rows:
        if len(row) != width:
            raise CSVParseError(
                f"{path}, line {line}: expected {width} fields, found {len(row)}", line=line)
        rec = []
        for col, cell in enumerate(row, start=1):
            text = cell.strip()
            if col - 1 == lab_idx:
                key = text.lower()
                if key not in _LABEL_WORDS:
                    raise CSVParseError(
                        f"{path}, line {line}, column {col}: bad label {text!r}", line=line)
                labels.append(_LABEL_WORDS[key])
                continue
            try:
                val = float(text)
            except ValueError:
                raise CSVParseError(
                    f"{path}, line {line}, column {col}: not a number: {text!r}", line=line
                ) from None
            if not math.isfinite(val):
                raise CSVParseError(
                    f"{path}, line {line}, column {col}: non-finite value {text!r}", line=line)
            rec.append(val)
        values.append(rec)
    cols = None
    if names is not None:
        cols = tuple(c for j, c in enumerate(names) if j != lab_idx)
    return Dataset(np.array(values, dtype=float).reshape(len(values), -1),
                   None if lab_idx is None else np.array(labels), cols)


def write_csv(path, points, header=None, labels=None) -> None:
    """Write rows of floats (round-trip exact repr), optional header and label column."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header is not None:
            w.writerow(list(header) + (["label"] if labels is not None else []))
        for i, row in enumerate(pts):
            rec = [repr(float(v)) for v in row]
            if labels is not None:
                rec.append(int(labels[i]))
            w.writerow(rec)
