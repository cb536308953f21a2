"""Plot specification: JSON in, validated spec out.

A spec names one or more panels, each listing CSV curves (path, column,
legend label) and an optional inset time window.  All referenced CSVs
must share an identical ``time`` column; mismatches and unreadable or
ragged files are reported as :class:`SpecError`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class Curve:
    csv: Path
    column: str
    label: str


@dataclass(frozen=True)
class Panel:
    curves: tuple[Curve, ...]
    title: str = ""
    inset_window: tuple[float, float] | None = None


@dataclass(frozen=True)
class PlotSpec:
    output: str
    panels: tuple[Panel, ...]
    title: str = ""
    xlabel: str = "time"
    ylabel: str = "population"


@dataclass
class LoadedCurve:
    label: str
    times: np.ndarray
    values: np.ndarray


def _parse_curve(entry: dict, base: Path) -> Curve:
    try:
        return Curve(
            csv=base / entry["csv"],
            column=entry.get("column", "pop_e"),
            label=entry["label"],
        )
    except KeyError as exc:
        raise SpecError(f"curve entry missing key {exc}") from exc


def load_spec(path: Path) -> PlotSpec:
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec {path} is not valid JSON: {exc}") from exc
    base = path.parent
    if "output" not in raw:
        raise SpecError("spec needs an 'output' file name")
    panels_raw = raw.get("panels")
    if not panels_raw:
        raise SpecError("spec needs a non-empty 'panels' list")
    panels = []
    for panel in panels_raw:
        curves = tuple(_parse_curve(c, base) for c in panel.get("curves", []))
        if not curves:
            raise SpecError("every panel needs at least one curve")
        window = panel.get("inset")
        if window is not None:
            if not (isinstance(window, list) and len(window) == 2):
                raise SpecError("inset must be a [t_min, t_max] pair")
            window = (float(window[0]), float(window[1]))
        panels.append(Panel(curves=curves, title=panel.get("title", ""), inset_window=window))
    return PlotSpec(
        output=raw["output"],
        panels=tuple(panels),
        title=raw.get("title", ""),
        xlabel=raw.get("xlabel", "time"),
        ylabel=raw.get("ylabel", "population"),
    )


def read_trajectory_csv(path: Path, column: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SpecError(f"{path} is empty")
    header = rows[0]
    if "time" not in header or column not in header:
        raise SpecError(f"{path} lacks required columns 'time' and {column!r}")
    t_idx, v_idx = header.index("time"), header.index(column)
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SpecError(f"{path} is ragged: row widths {sorted(widths)}")
    try:
        data = np.array([[float(r[t_idx]), float(r[v_idx])] for r in rows[1:]])
    except ValueError as exc:
        raise SpecError(f"{path} has non-numeric cells: {exc}") from exc
    if data.size == 0:
        raise SpecError(f"{path} has no data rows")
    return data[:, 0], data[:, 1]


def load_curves(spec: PlotSpec) -> list[list[LoadedCurve]]:
    """Read every referenced CSV and enforce the shared time grid."""
    loaded: list[list[LoadedCurve]] = []
    reference: np.ndarray | None = None
    ref_name = ""
    for panel in spec.panels:
        row = []
        for curve in panel.curves:
            times, values = read_trajectory_csv(curve.csv, curve.column)
            if reference is None:
                reference, ref_name = times, str(curve.csv)
            elif len(times) != len(reference) or not np.allclose(times, reference, atol=1e-12):
                raise SpecError(
                    f"time grid of {curve.csv} does not match {ref_name}"
                )
            row.append(LoadedCurve(label=curve.label, times=times, values=values))
        loaded.append(row)
    return loaded
