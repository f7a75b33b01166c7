"""Figure construction for the three supported kinds.

Figures are built with matplotlib's object API (no pyplot, no global
state), so rendering is deterministic and needs no display. Every data
series carries the raw CSV identity in its ``gid`` for inspection, and
plotted values are the CSV values verbatim — no smoothing, no rescaling.
"""

import os
import re
from dataclasses import dataclass, field

import numpy as np
from matplotlib.figure import Figure

from .tables import read_results, read_sweep

KINDS = ("trajectory", "sumrate", "sweep")

# Display names for the algorithm identifiers the benchmark emits. Anything
# not listed here (or matching the retrain pattern) is labeled by its raw
# CSV name so no series is ever dropped.
_DISPLAY = {
    "dmoe": "expert mixture",
    "oracle": "perfect-CSI oracle",
    "tdma": "TDMA",
    "wmmse_naive": "per-agent WMMSE",
    "teamdnn": "plain team DNN",
}
_RETRAIN_RE = re.compile(r"^teamdnn_rup(\d+)$")

_AXIS_DEFAULTS = {
    "sumrate": ("slot", "mean sum-rate [bit/channel use]"),
    "trajectory": ("interval", "quality level"),
    "sweep": ("quality-estimate noise scale", "mean sum-rate [bit/channel use]"),
}


def display_label(name: str, overrides=None) -> str:
    """Display label for an algorithm name; unknown names label themselves."""
    if overrides and name in overrides:
        return overrides[name]
    m = _RETRAIN_RE.match(name)
    if m:
        return f"plain team DNN ({m.group(1)} retrain steps)"
    return _DISPLAY.get(name, name)


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: which CSV, which kind, where the image goes."""

    source: str
    out: str
    kind: str
    xlabel: str = None
    ylabel: str = None
    title: str = None
    labels: dict = field(default_factory=dict)
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {KINDS}")
        if not os.path.exists(self.source):
            raise FileNotFoundError(f"input CSV not found: {self.source}")
        if self.dpi < 1:
            raise ValueError("dpi must be positive")


def _new_axes(spec: PlotSpec):
    fig = Figure(figsize=(8.0, 4.5))
    ax = fig.add_subplot()
    xdef, ydef = _AXIS_DEFAULTS[spec.kind]
    ax.set_xlabel(spec.xlabel if spec.xlabel is not None else xdef)
    ax.set_ylabel(spec.ylabel if spec.ylabel is not None else ydef)
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _render_sumrate(spec: PlotSpec):
    data = read_results(spec.source)
    fig, ax = _new_axes(spec)
    # Color assignment follows the sorted algorithm names so the same file
    # (or any file with the same algorithms) always colors alike.
    names = sorted(set(data["algorithm"]))
    for i, name in enumerate(names):
        mask = data["algorithm"] == name
        order = np.argsort(data["slot"][mask], kind="stable")
        x = data["slot"][mask][order]
        y = data["mean_sum_rate"][mask][order]
        se = data["std_err"][mask][order]
        color = f"C{i % 10}"
        line, = ax.plot(x, y, color=color,
                        label=display_label(name, spec.labels))
        line.set_gid(name)
        ax.fill_between(x, y - se, y + se, color=color, alpha=0.25,
                        linewidth=0)
    ax.legend(loc="best", fontsize="small")
    return fig


def _render_trajectory(spec: PlotSpec):
    data = read_results(spec.source)
    fig, ax = _new_axes(spec)
    # Quality is constant within an interval, so the first row of each
    # interval carries the whole story.
    intervals, first = np.unique(data["interval"], return_index=True)
    for i, col in enumerate(("gamma1", "gamma2")):
        line, = ax.plot(intervals, data[col][first], marker="o",
                        color=f"C{i}", label=f"agent {i + 1} quality")
        line.set_gid(col)
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="best", fontsize="small")
    return fig


def _render_sweep(spec: PlotSpec):
    data = read_sweep(spec.source)
    fig, ax = _new_axes(spec)
    container = ax.errorbar(data["sigma_n"], data["mean_sum_rate"],
                            yerr=data["std_err"], marker="o", capsize=3,
                            color="C0", label="expert mixture")
    container[0].set_gid("sweep")
    ax.legend(loc="best", fontsize="small")
    return fig


_RENDERERS = {
    "sumrate": _render_sumrate,
    "trajectory": _render_trajectory,
    "sweep": _render_sweep,
}


def render(spec: PlotSpec) -> Figure:
    """Build the figure for `spec` without writing anything."""
    return _RENDERERS[spec.kind](spec)


def render_to_file(spec: PlotSpec) -> None:
    """Build the figure and write it to `spec.out` (format by extension;
    .png is the lossless default, vector formats work the same way)."""
    fig = render(spec)
    fig.savefig(spec.out, dpi=spec.dpi, bbox_inches="tight")
