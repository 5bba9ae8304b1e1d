"""Delimited output files.

Every writer emits a single versioned schema comment line, then a header
row, then data rows in a deterministic order, so identical inputs always
produce byte-identical files. Floats are written with ``repr`` (lossless
shortest form) except for display percentages, which are fixed to two
decimals.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

from .cases import InfectionLabel, Violation
from .classify import EvalReport
from .dynamics import DailySeries, DelayStats, GeoRegressionDataset, SpatialTable, WeeklySnapshot
from .ingest import ParseSummary
from .metrics import ComparisonRow
from .taxonomy import CATEGORIES, LEAVES, parent_of


def _open(path: str | Path, version_tag: str):
    handle = Path(path).open("w", encoding="utf-8", newline="")
    handle.write(f"# covtrace {version_tag} v1\n")
    return handle


def write_table1(snapshots: Sequence[WeeklySnapshot], path: str | Path) -> None:
    """Weekly cumulative percentage table, one row per taxonomy leaf."""
    with _open(path, "table1") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            ["category", "subcategory"] + [f"week_{s.week_index}" for s in snapshots]
        )
        displayed = [s.displayed() for s in snapshots]
        for leaf in LEAVES:
            writer.writerow(
                [parent_of(leaf).value, leaf.value] + [f"{d[leaf]:.2f}" for d in displayed]
            )


def write_daily(series: DailySeries, path: str | Path) -> None:
    with _open(path, "daily") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["category", "date", "new_cases", "cumulative_cases"])
        for category in CATEGORIES:
            for point in series.per_category[category]:
                writer.writerow(
                    [category.value, point.day.isoformat(), point.new_cases, point.cumulative]
                )


def write_spatial(table: SpatialTable, path: str | Path) -> None:
    with _open(path, "spatial") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["province"] + [c.value for c in CATEGORIES] + ["total"])
        for province, row in table.provinces.items():
            counts = [row[c] for c in CATEGORIES]
            writer.writerow([province] + counts + [sum(counts)])


def write_spatial_cities(table: SpatialTable, path: str | Path) -> None:
    with _open(path, "spatial_cities") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["province", "city"] + [c.value for c in CATEGORIES] + ["total"])
        for (province, city), row in table.cities.items():
            counts = [row[c] for c in CATEGORIES]
            writer.writerow([province, city] + counts + [sum(counts)])


def write_delays(stats: DelayStats, path: str | Path) -> None:
    """Delay histogram with a running fraction column (days are contiguous)."""
    with _open(path, "delays") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["delay_days", "count", "cumulative_fraction"])
        top = max(stats.histogram) if stats.histogram else 0
        running = 0
        for day in range(top + 1):
            running += stats.histogram.get(day, 0)
            fraction = running / stats.defined if stats.defined else 0.0
            writer.writerow([day, stats.histogram.get(day, 0), repr(fraction)])


def write_labels(labels: Mapping[str, InfectionLabel], path: str | Path) -> None:
    with _open(path, "labels") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", "category", "subcategory", "score"])
        for case_id in sorted(labels):
            label = labels[case_id]
            writer.writerow(
                [case_id, label.category.value, label.subcategory.value, repr(label.score)]
            )


def write_geo_dataset(dataset: GeoRegressionDataset, path: str | Path) -> None:
    with _open(path, "geo_dataset") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["city", "distance_km", "outflow_fraction", "reported_cases"])
        for row in dataset.rows:
            writer.writerow(
                [row.city, repr(row.distance_km), repr(row.outflow_fraction), row.reported_cases]
            )


def write_comparison(rows: Sequence[ComparisonRow], path: str | Path) -> None:
    with _open(path, "comparison") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["model", "explained_variance", "mae", "mse"])
        for row in rows:
            triple = row.held_out
            explained = "undefined" if triple.explained_variance is None else repr(triple.explained_variance)
            writer.writerow([row.model, explained, repr(triple.mae), repr(triple.mse)])


def write_ingest_summary(
    summary: ParseSummary, violation_count: int, path: str | Path
) -> None:
    with _open(path, "ingest_summary") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerow(["lines_read", summary.lines_read])
        writer.writerow(["accepted", summary.accepted])
        writer.writerow(["rejected", len(summary.rejected)])
        writer.writerow(["edge_lines_read", summary.edge_lines_read])
        writer.writerow(["edges_accepted", summary.edges_accepted])
        writer.writerow(["edges_rejected", len(summary.edges_rejected)])
        writer.writerow(["dangling_contacts", summary.dangling_contacts])
        writer.writerow(["validation_violations", violation_count])


def write_rejects(summary: ParseSummary, path: str | Path) -> None:
    with _open(path, "rejects") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["stream", "line_no", "reason"])
        for reject in summary.rejected:
            writer.writerow(["corpus", reject.line_no, reject.reason])
        for reject in summary.edges_rejected:
            writer.writerow(["edges", reject.line_no, reject.reason])


def write_validation(violations: Mapping[str, Sequence[Violation]], path: str | Path) -> None:
    with _open(path, "validation") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", "field", "rule"])
        for case_id in sorted(violations):
            for violation in violations[case_id]:
                writer.writerow([case_id, violation.field, violation.rule])


def write_eval(report: EvalReport, path: str | Path) -> None:
    """Accuracy plus per-leaf precision/recall for a labeled evaluation."""
    with _open(path, "eval") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["leaf", "precision", "recall", "support"])
        for i, leaf in enumerate(LEAVES):
            writer.writerow(
                [
                    leaf.value,
                    repr(report.precision[leaf]),
                    repr(report.recall[leaf]),
                    int(report.confusion[i, :].sum()),
                ]
            )
        writer.writerow(["__accuracy__", repr(report.accuracy), "", report.total])
