"""CSV readers for the two benchmark file schemas.

Columns are looked up by name, so extra columns are tolerated; a missing
required column is a :class:`SchemaError` naming the first absent column.
"""

import csv

import numpy as np

RESULTS_COLUMNS = ("slot", "interval", "gamma1", "gamma2", "algorithm",
                   "mean_sum_rate", "std_err")
SWEEP_COLUMNS = ("sigma_n", "mean_sum_rate", "std_err")


class SchemaError(ValueError):
    """The CSV file does not match the expected schema."""


def _read_rows(path, required):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty CSV, no header row")
        for col in required:
            if col not in reader.fieldnames:
                raise SchemaError(f"{path}: missing column {col!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _column(rows, name, path):
    try:
        return np.array([float(r[name]) for r in rows])
    except ValueError as e:
        raise SchemaError(f"{path}: non-numeric value in column {name!r} "
                          f"({e})") from e


def read_results(path):
    """Per-slot benchmark rows as a dict of column arrays.

    Returns keys ``slot``, ``interval``, ``gamma1``, ``gamma2``,
    ``mean_sum_rate``, ``std_err`` (float arrays) and ``algorithm``
    (object array of names), all aligned by row.
    """
    rows = _read_rows(path, RESULTS_COLUMNS)
    out = {name: _column(rows, name, path)
           for name in RESULTS_COLUMNS if name != "algorithm"}
    out["algorithm"] = np.array([r["algorithm"] for r in rows], dtype=object)
    return out


def read_sweep(path):
    """Noise-sweep rows as a dict of float column arrays."""
    rows = _read_rows(path, SWEEP_COLUMNS)
    return {name: _column(rows, name, path) for name in SWEEP_COLUMNS}
