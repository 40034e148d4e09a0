"""Plain-text tabular and JSON output helpers.

Tables are tab-separated with a single header line of column names.
Floats are written with ``%.17g`` so that a re-run with identical inputs
produces byte-identical files.
"""

from __future__ import annotations

import json
import os

import numpy as np


def format_float(value) -> str:
    return "%.17g" % float(value)


def write_table(path, columns: dict) -> None:
    """Write named columns (equal-length 1-d arrays) as a TSV table."""
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    n = len(arrays[0])
    for name, arr in zip(names, arrays):
        if len(arr) != n:
            raise ValueError(f"column {name!r} has length {len(arr)}, expected {n}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(names) + "\n")
        for i in range(n):
            fields = []
            for arr in arrays:
                v = arr[i]
                if np.issubdtype(arr.dtype, np.integer):
                    fields.append(str(int(v)))
                else:
                    fields.append(format_float(v))
            fh.write("\t".join(fields) + "\n")


def read_table(path) -> dict:
    """Read a TSV table written by :func:`write_table` into float columns."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: empty table")
        names = header.split("\t")
        rows = [line.split("\t") for line in fh if line.strip()]
    data = np.array(rows, dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(names))
    return {name: data[:, j] for j, name in enumerate(names)}


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
