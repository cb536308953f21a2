"""Comparison figures from corrpic trajectory CSVs."""

from .render import render, save
from .spec import PlotSpec, SpecError, load_curves, load_spec

__version__ = "0.1.0"
