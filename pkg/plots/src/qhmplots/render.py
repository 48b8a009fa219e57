"""Figure rendering from aggregate training-log CSVs.

Input files are the harness's ``aggregate.csv``: per-epoch rows with
``<metric>_mean``, ``<metric>_min``, ``<metric>_max`` columns for each logged
metric.  One curve (the mean) is drawn per input file with the min-max range
shaded behind it; band edges are the parsed CSV values, never smoothed or
resampled.

Rendering is deterministic: fixed style, pinned SVG hash salt, no embedded
timestamps.  Every job writes both a PNG and an SVG next to the requested
output path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

METRICS = ("loss", "full_grad_norm", "min_full_grad_norm")

_Y_LABEL = {
    "loss": "training loss",
    "full_grad_norm": "full gradient norm",
    "min_full_grad_norm": "min full gradient norm",
}


class PlotError(ValueError):
    """Invalid job or malformed/mismatched input CSVs."""


@dataclass(frozen=True)
class SeriesSpec:
    path: str
    label: str


@dataclass(frozen=True)
class PlotJob:
    """One figure: metric curves for a list of labelled aggregate CSVs."""

    inputs: tuple[SeriesSpec, ...]
    metric: str = "min_full_grad_norm"
    y_scale: str = "linear"
    output: str = "figure.png"
    title: str | None = None

    def __post_init__(self):
        if not self.inputs:
            raise PlotError("job needs at least one input CSV")
        labels = [s.label for s in self.inputs]
        if len(set(labels)) != len(labels):
            raise PlotError("labels must be unique")
        if self.metric not in METRICS:
            raise PlotError(f"metric must be one of {METRICS}")
        if self.y_scale not in ("linear", "log"):
            raise PlotError("y_scale must be 'linear' or 'log'")

    @staticmethod
    def from_dict(raw: dict) -> "PlotJob":
        allowed = {"inputs", "metric", "y_scale", "output", "title"}
        unknown = set(raw) - allowed
        if unknown:
            raise PlotError(f"unknown job keys: {sorted(unknown)}")
        inputs = raw.get("inputs", [])
        if not isinstance(inputs, list):
            raise PlotError("inputs must be a list of {path, label}")
        series = []
        for entry in inputs:
            if not isinstance(entry, dict) or set(entry) - {"path", "label"}:
                raise PlotError("each input needs exactly {path, label}")
            series.append(SeriesSpec(path=entry["path"], label=entry["label"]))
        return PlotJob(
            inputs=tuple(series),
            metric=raw.get("metric", "min_full_grad_norm"),
            y_scale=raw.get("y_scale", "linear"),
            output=raw.get("output", "figure.png"),
            title=raw.get("title"),
        )


@dataclass(frozen=True)
class Series:
    label: str
    epoch: np.ndarray
    mean: np.ndarray
    lo: np.ndarray
    hi: np.ndarray


def load_series(spec: SeriesSpec, metric: str) -> Series:
    """Parse one aggregate CSV; band edges are the raw min/max columns."""
    path = Path(spec.path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotError(f"{path}: empty CSV")
    cols = {f"{metric}_mean", f"{metric}_min", f"{metric}_max", "epoch"}
    missing = cols - set(rows[0])
    if missing:
        raise PlotError(f"{path}: missing columns {sorted(missing)}")
    return Series(
        label=spec.label,
        epoch=np.array([float(r["epoch"]) for r in rows]),
        mean=np.array([float(r[f"{metric}_mean"]) for r in rows]),
        lo=np.array([float(r[f"{metric}_min"]) for r in rows]),
        hi=np.array([float(r[f"{metric}_max"]) for r in rows]),
    )


def render(job: PlotJob) -> list[Path]:
    """Render the job to PNG + SVG; returns the written paths.

    Raises before writing anything if any input is malformed or the epoch
    grids differ (no resampling).
    """
    series = [load_series(s, job.metric) for s in job.inputs]
    base = series[0].epoch
    for s in series[1:]:
        if not np.array_equal(s.epoch, base):
            raise PlotError(
                f"epoch grids differ between {series[0].label!r} and {s.label!r}"
            )

    with matplotlib.rc_context(
        {
            "svg.hashsalt": "qhmplots",
            "svg.fonttype": "none",
            "figure.figsize": (6.4, 4.2),
            "figure.dpi": 120,
        }
    ):
        fig, ax = plt.subplots()
        for s in series:
            (line,) = ax.plot(s.epoch, s.mean, label=s.label, linewidth=1.6)
            ax.fill_between(s.epoch, s.lo, s.hi, color=line.get_color(), alpha=0.25,
                            linewidth=0)
        ax.set_xlabel("epoch")
        ax.set_ylabel(_Y_LABEL[job.metric])
        if job.y_scale == "log":
            ax.set_yscale("log")
        if job.title:
            ax.set_title(job.title)
        ax.legend()
        fig.tight_layout()

        out = Path(job.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        written = []
        for suffix in (".png", ".svg"):
            target = out.with_suffix(suffix)
            fig.savefig(target, metadata=_no_date_metadata(suffix))
            written.append(target)
        plt.close(fig)
    return written


def _no_date_metadata(suffix: str) -> dict:
    if suffix == ".svg":
        return {"Date": None}
    return {}
