"""qhmplots: renders qhmlab aggregate CSVs into metric-vs-epoch figures with
min-max shaded bands across seeds."""

from .render import PlotJob, SeriesSpec, load_series, render

__version__ = "0.1.0"

__all__ = ["PlotJob", "SeriesSpec", "load_series", "render", "__version__"]
