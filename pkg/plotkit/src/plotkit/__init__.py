"""Turns benchmark CSV files into figures.

Three figure kinds, one per CSV shape:

- ``sumrate``: one line per algorithm over the slot index, mean sum-rate
  with a shaded +/- 1 standard-error band (reads the results CSV).
- ``trajectory``: the per-agent quality levels against the interval index
  (reads the same results CSV).
- ``sweep``: mean sum-rate against the estimate-noise scale (reads the
  sweep CSV).

The package never touches the simulator; the CSV files are the whole
interface.
"""

from .figures import KINDS, PlotSpec, render, render_to_file
from .tables import SchemaError, read_results, read_sweep

__all__ = [
    "KINDS",
    "PlotSpec",
    "SchemaError",
    "read_results",
    "read_sweep",
    "render",
    "render_to_file",
]
