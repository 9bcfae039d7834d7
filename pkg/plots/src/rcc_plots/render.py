"""Turn sweep CSV files into a single line figure.

Input files must carry the exact header written by the sweep runner:

    sweep_kind,value_db,trial,sum_rate_bpcu,sinr_db,feasible,iterations

Each input file becomes one curve: the mean of ``sum_rate_bpcu`` over
trials at each swept value, infeasible rows included at their recorded
rate of zero. Files whose stem contains ``baseline`` are drawn dotted.
Rendering depends only on the CSV contents and the PlotSpec fields, so
a rerun yields the same pixel dimensions and the same plotted values.
"""

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

EXPECTED_HEADER = [
    "sweep_kind",
    "value_db",
    "trial",
    "sum_rate_bpcu",
    "sinr_db",
    "feasible",
    "iterations",
]

X_LABELS = {
    "mu": "radar SINR floor (dB)",
    "pc_max": "communication power budget (dBm)",
    "pr_cap": "radar per-subcarrier power cap (dBm)",
    "pc_cap": "communication per-subcarrier power cap (dBm)",
}

FIGSIZE = (6.4, 4.8)
DPI = 100


class PlotDataError(Exception):
    """A CSV file does not match the sweep interface."""


@dataclass(frozen=True)
class PlotSpec:
    """What to read, how to group it, and where the image goes."""

    csv_paths: tuple
    kind: str
    out_path: str
    x_field: str = "value_db"
    y_field: str = "sum_rate_bpcu"
    group_field: str = "trial"
    x_label: str = ""
    y_label: str = "sum rate (bpcu)"

    def __post_init__(self):
        if not self.csv_paths:
            raise PlotDataError("no input CSV files given")
        for f in (self.x_field, self.y_field, self.group_field):
            if f not in EXPECTED_HEADER:
                raise PlotDataError(f"unknown CSV column {f!r}")
        if not self.x_label:
            object.__setattr__(self, "x_label", X_LABELS.get(self.kind, self.kind))


def load_series(path, spec):
    """Read one CSV and reduce it to (x values, per-x mean of y).

    Raises PlotDataError on a malformed header, an empty file, or rows
    whose sweep_kind disagrees with the requested kind.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotDataError(f"{path}: empty file") from None
        if header != EXPECTED_HEADER:
            raise PlotDataError(
                f"{path}: malformed header {','.join(header)!r}")
        xi = EXPECTED_HEADER.index(spec.x_field)
        yi = EXPECTED_HEADER.index(spec.y_field)
        buckets = defaultdict(list)
        for row in reader:
            if len(row) != len(EXPECTED_HEADER):
                raise PlotDataError(f"{path}: bad row {row!r}")
            if row[0] != spec.kind:
                raise PlotDataError(
                    f"{path}: sweep_kind {row[0]!r} does not match {spec.kind!r}")
            buckets[float(row[xi])].append(float(row[yi]))
    if not buckets:
        raise PlotDataError(f"{path}: no data rows")
    xs = sorted(buckets)
    means = [sum(buckets[x]) / len(buckets[x]) for x in xs]
    return xs, means


def build_figure(spec):
    """Assemble the figure; returns (figure, {label: (xs, means)})."""
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    series = {}
    for path in spec.csv_paths:
        stem = Path(path).stem
        xs, means = load_series(path, spec)
        style = ":" if "baseline" in stem else "-"
        marker = "s" if "baseline" in stem else "o"
        ax.plot(xs, means, style, marker=marker, label=stem)
        series[stem] = (xs, means)
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    return fig, series


def render(spec):
    """Write the image for ``spec`` and return the plotted series."""
    fig, series = build_figure(spec)
    try:
        fig.savefig(spec.out_path, dpi=DPI)
    finally:
        plt.close(fig)
    return series
