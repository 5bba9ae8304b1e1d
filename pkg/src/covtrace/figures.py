"""Static figure rendering for the report pipeline.

Each function draws one figure from an already-computed analytics object
and writes it straight to a file. PNG metadata is pinned so re-rendering
the same inputs produces identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .dynamics import (
    DailySeries,
    DelayStats,
    GeoRegressionDataset,
    SpatialTable,
    WeeklySnapshot,
)
from .metrics import ComparisonRow
from .taxonomy import CATEGORIES, LEAVES

_SAVE_KW = {"dpi": 130, "metadata": {"Software": "covtrace"}}

_CATEGORY_COLORS = {
    "hubei_travel": "#c0392b",
    "public_transit": "#2980b9",
    "social": "#27ae60",
    "relative": "#8e44ad",
    "unknown": "#7f8c8d",
}


def _save(fig, path: str | Path) -> None:
    fig.savefig(Path(path), **_SAVE_KW)
    plt.close(fig)


def render_weekly(snapshots: Sequence[WeeklySnapshot], path: str | Path) -> None:
    """Cumulative percentage per leaf across weeks, one line per leaf."""
    fig, ax = plt.subplots(figsize=(9, 5.5))
    weeks = [s.week_index for s in snapshots]
    for leaf in LEAVES:
        values = [s.percentages[leaf] for s in snapshots]
        if max(values) < 0.5:
            continue  # keep the legend readable
        ax.plot(weeks, values, marker="o", label=leaf.value)
    ax.set_xlabel("week")
    ax.set_ylabel("cumulative share of cases (%)")
    ax.set_xticks(weeks)
    ax.set_title("Infection sources by week")
    ax.legend(fontsize=8, ncol=2)
    ax.grid(alpha=0.3)
    _save(fig, path)


def render_daily(series: DailySeries, path: str | Path) -> None:
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(9, 7), sharex=True)
    for category in CATEGORIES:
        points = series.per_category[category]
        days = [p.day for p in points]
        color = _CATEGORY_COLORS[category.value]
        top.plot(days, [p.new_cases for p in points], label=category.value, color=color)
        bottom.plot(days, [p.cumulative for p in points], label=category.value, color=color)
    top.set_ylabel("new cases")
    bottom.set_ylabel("cumulative cases")
    top.set_title("Daily dynamics by infection category")
    top.legend(fontsize=8)
    for ax in (top, bottom):
        ax.grid(alpha=0.3)
    fig.autofmt_xdate()
    _save(fig, path)


def render_spatial(table: SpatialTable, path: str | Path) -> None:
    provinces = list(table.provinces)
    fig, ax = plt.subplots(figsize=(9, max(3.0, 0.45 * len(provinces) + 1)))
    left = np.zeros(len(provinces))
    for category in CATEGORIES:
        values = np.array([table.provinces[p][category] for p in provinces], dtype=float)
        ax.barh(
            provinces,
            values,
            left=left,
            label=category.value,
            color=_CATEGORY_COLORS[category.value],
        )
        left += values
    ax.set_xlabel("cases")
    ax.set_title("Cases by province and infection category")
    ax.invert_yaxis()
    ax.legend(fontsize=8)
    _save(fig, path)


def render_delays(stats: DelayStats, path: str | Path) -> None:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    top = max(stats.histogram) if stats.histogram else 0
    days = list(range(top + 1))
    counts = [stats.histogram.get(d, 0) for d in days]
    ax.bar(days, counts, color="#2980b9")
    within = stats.fraction_within(5)
    if within is not None:
        ax.axvline(5.5, color="#c0392b", linestyle="--")
        ax.text(
            5.7,
            max(counts) * 0.9 if counts else 1,
            f"{100 * within:.1f}% within 5 days",
            color="#c0392b",
            fontsize=9,
        )
    ax.set_xlabel("days from symptom onset to admission")
    ax.set_ylabel("cases")
    ax.set_title("Admission delay distribution")
    _save(fig, path)


def render_geo(dataset: GeoRegressionDataset, path: str | Path) -> None:
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4.5))
    distance = [r.distance_km for r in dataset.rows]
    outflow = [r.outflow_fraction for r in dataset.rows]
    cases = [r.reported_cases for r in dataset.rows]
    left.scatter(distance, cases, s=18, color="#2980b9")
    left.set_xlabel("distance from Wuhan (km)")
    left.set_ylabel("reported cases")
    right.scatter(outflow, cases, s=18, color="#27ae60")
    right.set_xlabel("outflow fraction")
    right.set_ylabel("reported cases")
    fig.suptitle("Reported cases against geographic features")
    _save(fig, path)


def render_comparison(rows: Sequence[ComparisonRow], path: str | Path) -> None:
    fig, axes = plt.subplots(1, 3, figsize=(11, 4))
    names = [row.model for row in rows]
    panels = (
        ("mse", [row.held_out.mse for row in rows]),
        ("mae", [row.held_out.mae for row in rows]),
        (
            "explained variance",
            [
                row.held_out.explained_variance
                if row.held_out.explained_variance is not None
                else 0.0
                for row in rows
            ],
        ),
    )
    for ax, (title, values) in zip(axes, panels):
        ax.bar(names, values, color="#8e44ad")
        ax.set_title(title)
        ax.tick_params(axis="x", rotation=45)
    fig.suptitle("Held-out comparison of regression models")
    fig.tight_layout()
    _save(fig, path)
