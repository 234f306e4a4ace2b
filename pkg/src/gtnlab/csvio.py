"""CSV reading and writing for point sets and labeled pairs.

Floats are written with 17 significant digits so round-trips are lossless;
readers report the 1-based line number of any ragged or non-numeric row.
"""

from __future__ import annotations

import csv

import numpy as np

from .core import LabeledDataset, as_points


def _format_row(values) -> str:
    return ",".join(f"{v:.17g}" for v in values)


def write_points_csv(path, points):
    """Header x0..x{d-1}, one row per point. Accepts an empty point set."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    d = pts.shape[1] if pts.size else (pts.shape[1] or 1)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"x{j}" for j in range(d)) + "\n")
        for row in pts:
            fh.write(_format_row(row) + "\n")


def write_pairs_csv(path, labeled: LabeledDataset):
    """Header y0..,x0..[,cluster]; one (source, target) pair per row."""
    d = labeled.d
    cols = [f"y{j}" for j in range(d)] + [f"x{j}" for j in range(d)]
    if labeled.clusters is not None:
        cols.append("cluster")
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(labeled.n):
            row = _format_row(labeled.sources[i]) + "," + _format_row(labeled.targets[i])
            if labeled.clusters is not None:
                row += f",{labeled.clusters[i]}"
            fh.write(row + "\n")


def _read_rows(path):
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=1) if row]
    if not rows:
        raise ValueError(f"{path}: empty dataset")
    # A first line with any non-numeric cell is a header (column names are free-form).
    try:
        [float(c) for c in rows[0][1]]
    except ValueError:
        header = rows[0][1]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: empty dataset (header only)")
        return header, rows
    return None, rows


def _parse_matrix(path, rows, width=None):
    width = width if width is not None else len(rows[0][1])
    data = np.empty((len(rows), width))
    for i, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: line {lineno}: expected {width} values, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value {cell!r} in column {j}") from None
    return data


def read_points_csv(path) -> np.ndarray:
    """Parse a CSV of row vectors; a non-numeric first line is treated as a header."""
    _, rows = _read_rows(path)
    return as_points(_parse_matrix(path, rows), str(path), min_rows=1)


def read_pairs_csv(path) -> LabeledDataset:
    """Parse a pairs CSV back into a LabeledDataset.

    The layout is inferred from the header when present (y*/x*/cluster
    columns); headerless files must have an even column count of y then x.
    """
    header, rows = _read_rows(path)
    width = len(rows[0][1])
    has_cluster = False
    if header is not None:
        has_cluster = header[-1].strip().lower() == "cluster"
        d2 = len(header) - (1 if has_cluster else 0)
    else:
        d2 = width
    if d2 % 2 != 0 or d2 < 2:
        raise ValueError(f"{path}: cannot split {d2} value columns into equal y and x halves")
    d = d2 // 2
    data = _parse_matrix(path, rows, width=d2 + (1 if has_cluster else 0))
    clusters = data[:, -1].astype(np.int64) if has_cluster else None
    return LabeledDataset(sources=data[:, :d], targets=data[:, d : 2 * d], clusters=clusters)
