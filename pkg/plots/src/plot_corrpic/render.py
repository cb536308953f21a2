"""Figure rendering from loaded curve panels.

Output is deterministic for a given spec and CSVs: the SVG hash salt is
pinned and date metadata is stripped, so re-rendering reproduces the file
byte for byte.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .spec import PlotSpec, load_curves

matplotlib.rcParams["svg.hashsalt"] = "plot-corrpic"


def render(spec: PlotSpec):
    """Build the figure for a spec; returns the matplotlib figure."""
    panels = load_curves(spec)
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(6.0 * n, 4.2), squeeze=False)
    for ax, panel_spec, curves in zip(axes[0], spec.panels, panels):
        for curve in curves:
            ax.plot(curve.times, curve.values, label=curve.label, linewidth=1.4)
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel(spec.ylabel)
        if panel_spec.title:
            ax.set_title(panel_spec.title)
        ax.legend(loc="best")
        if panel_spec.inset_window is not None:
            lo, hi = panel_spec.inset_window
            inset = ax.inset_axes([0.45, 0.45, 0.5, 0.5])
            for curve in curves:
                mask = (curve.times >= lo) & (curve.times <= hi)
                inset.plot(curve.times[mask], curve.values[mask], linewidth=1.0)
            inset.set_xlim(lo, hi)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return fig


def save(fig, output: Path, fmt: str | None = None) -> Path:
    fmt = fmt or (output.suffix.lstrip(".") or "svg")
    target = output.with_suffix(f".{fmt}")
    target.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(target, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
    plt.close(fig)
    return target
