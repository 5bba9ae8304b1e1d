"""Temporal and spatial outbreak dynamics.

Weekly snapshots are cumulative: week w covers every report dated before
anchor + 7w. Percentages are kept unrounded internally (they sum to 100
exactly) and rounded half-up to two decimals only for display.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from datetime import date, timedelta
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Mapping

import numpy as np

from .cases import CaseReport, InfectionLabel, admission_delay
from .dataset import Dataset
from .ingest import TrajectoryDatabase
from .taxonomy import CATEGORIES, LEAVES, Category, SubCategory, parent_of

# First reporting window opens on this date unless the caller overrides it.
DEFAULT_ANCHOR = date(2020, 1, 18)

EARTH_RADIUS_KM = 6371.0088  # mean Earth radius
WUHAN_LAT = 30.5928
WUHAN_LON = 114.3055


class DataWarning(UserWarning):
    """Recoverable data-quality issue noticed during aggregation."""


def round_half_up(value: float, places: int = 2) -> float:
    """Decimal round-half-up, e.g. 0.125 -> 0.13 at two places."""
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class WeeklySnapshot:
    """Cumulative per-leaf counts and percentages for one week window."""

    week_index: int  # 1-based
    window: tuple[date, date]  # [anchor, end) half-open
    counts: Mapping[SubCategory, int]
    percentages: Mapping[SubCategory, float]  # unrounded, sums to 100

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def displayed(self) -> dict[SubCategory, float]:
        return {leaf: round_half_up(self.percentages[leaf]) for leaf in LEAVES}


def weekly_snapshots(
    db: TrajectoryDatabase,
    labels: Mapping[str, InfectionLabel],
    anchor: date = DEFAULT_ANCHOR,
    weeks: int | None = None,
) -> list[WeeklySnapshot]:
    """Cumulative weekly per-leaf breakdowns of the labeled corpus.

    Every report needs an entry in ``labels`` (the unknown label counts
    like any other). Reports dated before the anchor raise a DataWarning
    and land in week 1 along with everything else inside the first window.
    """
    missing = [r.id for r in db if r.id not in labels]
    if missing:
        raise ValueError(f"no label for case ids: {', '.join(missing[:5])}")
    pre_anchor = sum(1 for r in db if r.report_date < anchor)
    if pre_anchor:
        warnings.warn(
            f"{pre_anchor} report(s) dated before the anchor {anchor.isoformat()}; "
            "they are counted from week 1",
            DataWarning,
            stacklevel=2,
        )
    if weeks is None:
        if len(db) == 0:
            weeks = 1
        else:
            last = max(r.report_date for r in db)
            weeks = max(1, math.ceil(((last - anchor).days + 1) / 7))
    snapshots: list[WeeklySnapshot] = []
    for week in range(1, weeks + 1):
        end = anchor + timedelta(days=7 * week)
        counts = {leaf: 0 for leaf in LEAVES}
        for report in db:
            if report.report_date < end:
                counts[labels[report.id].subcategory] += 1
        total = sum(counts.values())
        if total:
            percentages = {leaf: 100.0 * counts[leaf] / total for leaf in LEAVES}
        else:
            percentages = {leaf: 0.0 for leaf in LEAVES}
        snapshots.append(
            WeeklySnapshot(
                week_index=week,
                window=(anchor, end),
                counts=counts,
                percentages=percentages,
            )
        )
    return snapshots


def local_transmission_share(snapshot: WeeklySnapshot) -> float:
    """Percentage of cumulative cases attributed to any local source.

    Local means every leaf except hubei travel and unknown.
    """
    return sum(
        snapshot.percentages[leaf]
        for leaf in LEAVES
        if leaf not in (SubCategory.HUBEI, SubCategory.UNKNOWN)
    )


@dataclass(frozen=True)
class DailyPoint:
    day: date
    new_cases: int
    cumulative: int


@dataclass
class DailySeries:
    """Contiguous per-category daily counts over the corpus span."""

    per_category: dict[Category, list[DailyPoint]]
    span: tuple[date, date]  # inclusive


def daily_series(
    db: TrajectoryDatabase, labels: Mapping[str, InfectionLabel]
) -> DailySeries:
    """New and cumulative daily counts per category, zero-filled."""
    if len(db) == 0:
        raise ValueError("cannot build daily series for an empty corpus")
    missing = [r.id for r in db if r.id not in labels]
    if missing:
        raise ValueError(f"no label for case ids: {', '.join(missing[:5])}")
    first = min(r.report_date for r in db)
    last = max(r.report_date for r in db)
    day_count = (last - first).days + 1
    new: dict[Category, list[int]] = {c: [0] * day_count for c in CATEGORIES}
    for report in db:
        category = labels[report.id].category
        new[category][(report.report_date - first).days] += 1
    per_category: dict[Category, list[DailyPoint]] = {}
    for category in CATEGORIES:
        running = 0
        points = []
        for offset, count in enumerate(new[category]):
            running += count
            points.append(DailyPoint(first + timedelta(days=offset), count, running))
        per_category[category] = points
    return DailySeries(per_category=per_category, span=(first, last))


def peak_date(series: DailySeries, category: Category) -> date:
    """Earliest day on which the category's new-case count peaks."""
    points = series.per_category[category]
    best = max(points, key=lambda p: p.new_cases)
    for point in points:
        if point.new_cases == best.new_cases:
            return point.day
    raise AssertionError("unreachable: series is never empty")


@dataclass
class SpatialTable:
    """Per-province (and per-city) counts by top-level category."""

    provinces: dict[str, dict[Category, int]]
    cities: dict[tuple[str, str], dict[Category, int]]

    @property
    def total(self) -> int:
        return sum(sum(row.values()) for row in self.provinces.values())


def spatial_table(
    db: TrajectoryDatabase, labels: Mapping[str, InfectionLabel]
) -> SpatialTable:
    missing = [r.id for r in db if r.id not in labels]
    if missing:
        raise ValueError(f"no label for case ids: {', '.join(missing[:5])}")
    provinces: dict[str, dict[Category, int]] = {}
    cities: dict[tuple[str, str], dict[Category, int]] = {}
    for report in db:
        category = labels[report.id].category
        province_row = provinces.setdefault(report.province, {c: 0 for c in CATEGORIES})
        province_row[category] += 1
        city_row = cities.setdefault((report.province, report.city), {c: 0 for c in CATEGORIES})
        city_row[category] += 1
    return SpatialTable(
        provinces=dict(sorted(provinces.items())),
        cities=dict(sorted(cities.items())),
    )


@dataclass
class DelayStats:
    """Histogram of onset-to-admission delays in whole days."""

    histogram: dict[int, int]
    defined: int
    excluded: int

    def fraction_within(self, days: int) -> float | None:
        """Fraction of defined delays at most ``days`` (inclusive)."""
        if self.defined == 0:
            return None
        within = sum(count for delay, count in self.histogram.items() if delay <= days)
        return within / self.defined


def admission_delay_stats(db: TrajectoryDatabase) -> DelayStats:
    """Distribution of admission delays; undated cases are excluded and counted."""
    histogram: dict[int, int] = {}
    defined = 0
    excluded = 0
    for report in db:
        delay = admission_delay(report)
        if delay is None:
            excluded += 1
            continue
        histogram[delay] = histogram.get(delay, 0) + 1
        defined += 1
    return DelayStats(histogram=dict(sorted(histogram.items())), defined=defined, excluded=excluded)


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance between two points in kilometres."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def load_coordinates(path: str | Path) -> dict[str, tuple[float, float]]:
    """Read a city,lat,lon CSV (header row required)."""
    coords: dict[str, tuple[float, float]] = {}
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(row for row in handle if not row.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:3]] != ["city", "lat", "lon"]:
            raise ValueError(f"expected header city,lat,lon in {path}")
        for row in reader:
            if not row:
                continue
            coords[row[0]] = (float(row[1]), float(row[2]))
    return coords


def load_outflow(path: str | Path) -> dict[str, float]:
    """Read a city,outflow_fraction CSV; fractions must sum to at most 1."""
    outflow: dict[str, float] = {}
    with Path(path).open(encoding="utf-8", newline="") as handle:
        reader = csv.reader(row for row in handle if not row.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["city", "outflow_fraction"]:
            raise ValueError(f"expected header city,outflow_fraction in {path}")
        for row in reader:
            if not row:
                continue
            fraction = float(row[1])
            if fraction < 0:
                raise ValueError(f"negative outflow fraction for {row[0]!r}")
            outflow[row[0]] = fraction
    total = sum(outflow.values())
    if total > 1.0 + 1e-9:
        raise ValueError(f"outflow fractions sum to {total}, exceeding 1")
    return outflow


@dataclass(frozen=True)
class GeoRow:
    city: str
    distance_km: float
    outflow_fraction: float
    reported_cases: int


@dataclass
class GeoRegressionDataset:
    """Per-city geographic features with reported case counts as target."""

    rows: list[GeoRow]

    def dataset(self) -> Dataset:
        return Dataset(
            x=np.array([[r.distance_km, r.outflow_fraction] for r in self.rows]),
            y=np.array([float(r.reported_cases) for r in self.rows]),
            feature_names=("distance_km", "outflow_fraction"),
        )


def build_geo_dataset(
    db: TrajectoryDatabase,
    coords: Mapping[str, tuple[float, float]],
    outflow: Mapping[str, float],
) -> GeoRegressionDataset:
    """One row per corpus city: distance from Wuhan, outflow share, case count.

    Every corpus city must appear in the coordinates table; cities missing
    from the outflow table get 0 with a DataWarning. The reference point is
    the coordinate table's Wuhan entry when present, so a Wuhan row always
    comes out at distance zero.
    """
    counts: dict[str, int] = {}
    for report in db:
        counts[report.city] = counts.get(report.city, 0) + 1
    missing = sorted(city for city in counts if city not in coords)
    if missing:
        raise ValueError(f"no coordinates for cities: {', '.join(missing)}")
    reference = coords.get("Wuhan", (WUHAN_LAT, WUHAN_LON))
    rows = []
    missing_outflow = []
    for city in sorted(counts):
        lat, lon = coords[city]
        if city in outflow:
            fraction = outflow[city]
        else:
            fraction = 0.0
            missing_outflow.append(city)
        rows.append(
            GeoRow(
                city=city,
                distance_km=haversine_km(reference[0], reference[1], lat, lon),
                outflow_fraction=fraction,
                reported_cases=counts[city],
            )
        )
    if missing_outflow:
        warnings.warn(
            f"no outflow fraction for cities: {', '.join(missing_outflow)}; using 0",
            DataWarning,
            stacklevel=2,
        )
    return GeoRegressionDataset(rows=rows)
