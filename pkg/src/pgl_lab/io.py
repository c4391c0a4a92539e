"""CSV helpers shared by every module that exports tables.

Numbers are always written with 17 significant digits so that a float
round-trips exactly and identical inputs give byte-identical files.
"""

import csv
from pathlib import Path

import numpy as np

FLOAT_FORMAT = ".17g"


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), FLOAT_FORMAT)
    if value is None:
        return ""
    return str(value)


def write_csv(path, columns):
    """Write a mapping of column name -> 1-D array (or list) to ``path``."""
    names = list(columns)
    cols = [list(columns[name]) for name in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"columns have unequal lengths: {sorted(lengths)}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*cols):
            writer.writerow([format_value(v) for v in row])
    return path


def write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    return path


def read_csv(path, numeric=True):
    """Read a CSV with a header row into a dict of columns."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    out = {}
    for j, name in enumerate(header):
        values = [row[j] for row in rows]
        out[name] = np.array([float(v) for v in values]) if numeric else values
    return out
