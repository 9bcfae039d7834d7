"""Render rcc-alloc sweep CSV files as line figures."""

from .render import PlotDataError, PlotSpec, build_figure, load_series, render

__all__ = ["PlotDataError", "PlotSpec", "build_figure", "load_series", "render"]

__version__ = "0.1.0"
