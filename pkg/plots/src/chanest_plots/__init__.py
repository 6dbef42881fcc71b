"""Figure regeneration for chanest benchmark CSVs."""

from .render import PlotSpec, Series, read_series, render

__version__ = "0.1.0"
