"""CSV output with full double precision."""
from __future__ import annotations

import csv

import numpy as np


def fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_rows(path, header, rows):
    """Write ``rows`` (iterables of str/int/float) under ``header``; RFC 4180 quoting."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_columns(path, header, columns):
    """Write equal-length columns; shorter columns are padded with empty cells."""
    n = max(len(c) for c in columns)
    rows = ([fmt(c[i]) if i < len(c) else "" for c in columns] for i in range(n))
    write_rows(path, header, rows)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))
