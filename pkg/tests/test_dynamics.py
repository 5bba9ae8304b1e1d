from __future__ import annotations

import math
import warnings
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import label_for, make_report
from covtrace.dynamics import (
    DEFAULT_ANCHOR,
    EARTH_RADIUS_KM,
    DataWarning,
    WeeklySnapshot,
    admission_delay_stats,
    build_geo_dataset,
    daily_series,
    haversine_km,
    load_coordinates,
    load_outflow,
    local_transmission_share,
    peak_date,
    round_half_up,
    spatial_table,
    weekly_snapshots,
)
from covtrace.ingest import CorpusMeta, TrajectoryDatabase
from covtrace.taxonomy import LEAVES, Category, SubCategory


def make_db(rows):
    """rows: iterable of (id, report_date, leaf) or (id, date, leaf, province, city)."""
    reports = {}
    labels = {}
    for row in rows:
        case_id, day, leaf = row[0], row[1], row[2]
        province = row[3] if len(row) > 3 else "Hunan"
        city = row[4] if len(row) > 4 else "Changsha"
        reports[case_id] = make_report(id=case_id, report_date=day, province=province, city=city)
        labels[case_id] = label_for(leaf)
    db = TrajectoryDatabase(
        reports=reports, edges=[], meta=CorpusMeta(source="test", record_count=len(reports), ingested_at="")
    )
    return db, labels


A = DEFAULT_ANCHOR  # 2020-01-18


class TestRoundHalfUp:
    @pytest.mark.parametrize(
        "value,expected",
        [(0.125, 0.13), (0.124, 0.12), (2.675, 2.68), (1.005, 1.01), (-0.125, -0.13)],
    )
    def test_half_rounds_away_from_zero(self, value, expected):
        assert round_half_up(value) == expected

    def test_other_precisions(self):
        assert round_half_up(0.15, 1) == 0.2
        assert round_half_up(123.456, 0) == 123.0


class TestWeeklySnapshots:
    def test_four_cases_four_leaves_is_25_each(self):
        db, labels = make_db(
            [
                ("A", A, SubCategory.HUBEI),
                ("B", A + timedelta(days=1), SubCategory.RELATIVE),
                ("C", A + timedelta(days=2), SubCategory.BUS),
                ("D", A + timedelta(days=3), SubCategory.RESTAURANT),
            ]
        )
        snapshots = weekly_snapshots(db, labels)
        assert len(snapshots) == 1
        snapshot = snapshots[0]
        assert snapshot.total == 4
        for leaf in (SubCategory.HUBEI, SubCategory.RELATIVE, SubCategory.BUS, SubCategory.RESTAURANT):
            assert snapshot.percentages[leaf] == 25.0
        assert snapshot.displayed()[SubCategory.HUBEI] == 25.0

    def test_windows_are_cumulative(self):
        db, labels = make_db(
            [
                ("A", A, SubCategory.HUBEI),
                ("B", A + timedelta(days=10), SubCategory.RELATIVE),
                ("C", A + timedelta(days=11), SubCategory.RELATIVE),
            ]
        )
        snapshots = weekly_snapshots(db, labels)
        assert len(snapshots) == 2
        assert snapshots[0].counts[SubCategory.HUBEI] == 1
        assert snapshots[0].total == 1
        # Week 2 includes week 1's case again: windows nest.
        assert snapshots[1].counts[SubCategory.HUBEI] == 1
        assert snapshots[1].counts[SubCategory.RELATIVE] == 2
        assert snapshots[1].total == 3

    def test_boundary_day_belongs_to_next_week(self):
        db, labels = make_db(
            [
                ("A", A, SubCategory.HUBEI),
                ("B", A + timedelta(days=7), SubCategory.RELATIVE),  # first day of week 2
            ]
        )
        snapshots = weekly_snapshots(db, labels)
        assert snapshots[0].total == 1
        assert snapshots[1].total == 2
        assert snapshots[0].window == (A, A + timedelta(days=7))

    def test_unrounded_percentages_sum_to_100(self):
        # 3 + 7 + 11 cases across three leaves: awkward fractions.
        rows = []
        for i in range(3):
            rows.append((f"H{i}", A, SubCategory.HUBEI))
        for i in range(7):
            rows.append((f"R{i}", A + timedelta(days=1), SubCategory.RELATIVE))
        for i in range(11):
            rows.append((f"B{i}", A + timedelta(days=2), SubCategory.BUS))
        db, labels = make_db(rows)
        snapshot = weekly_snapshots(db, labels)[0]
        assert math.fsum(snapshot.percentages.values()) == pytest.approx(100.0, abs=1e-9)
        assert sum(snapshot.displayed().values()) == pytest.approx(100.0, abs=0.5)

    def test_missing_label_raises_with_ids(self):
        db, labels = make_db([("A", A, SubCategory.HUBEI), ("B", A, SubCategory.BUS)])
        del labels["B"]
        with pytest.raises(ValueError, match="B"):
            weekly_snapshots(db, labels)

    def test_pre_anchor_report_warns_and_lands_in_week_1(self):
        db, labels = make_db([("A", A - timedelta(days=3), SubCategory.HUBEI)])
        with pytest.warns(DataWarning, match="before the anchor"):
            snapshots = weekly_snapshots(db, labels)
        assert snapshots[0].counts[SubCategory.HUBEI] == 1

    def test_explicit_week_count_pads_with_repeats(self):
        db, labels = make_db([("A", A, SubCategory.HUBEI)])
        snapshots = weekly_snapshots(db, labels, weeks=3)
        assert len(snapshots) == 3
        assert all(s.total == 1 for s in snapshots)

    def test_anchor_shift_equivariance(self):
        rows = [
            ("A", A, SubCategory.HUBEI),
            ("B", A + timedelta(days=5), SubCategory.RELATIVE),
            ("C", A + timedelta(days=9), SubCategory.BUS),
        ]
        shift = timedelta(days=30)
        shifted_rows = [(i, d + shift, leaf) for i, d, leaf in rows]
        db1, labels1 = make_db(rows)
        db2, labels2 = make_db(shifted_rows)
        original = weekly_snapshots(db1, labels1, anchor=A)
        moved = weekly_snapshots(db2, labels2, anchor=A + shift)
        assert [s.counts for s in original] == [s.counts for s in moved]
        assert [s.percentages for s in original] == [s.percentages for s in moved]

    @given(
        counts=st.lists(st.integers(min_value=0, max_value=40), min_size=14, max_size=14).filter(
            lambda c: sum(c) > 0
        )
    )
    @settings(max_examples=40, deadline=None)
    def test_percentage_closure_property(self, counts):
        rows = []
        for leaf, count in zip(LEAVES, counts):
            for i in range(count):
                rows.append((f"{leaf.value}-{i}", A + timedelta(days=i % 7), leaf))
        db, labels = make_db(rows)
        snapshot = weekly_snapshots(db, labels)[0]
        assert math.fsum(snapshot.percentages.values()) == pytest.approx(100.0, abs=1e-9)
        assert sum(snapshot.displayed().values()) == pytest.approx(100.0, abs=0.5)


class TestLocalShare:
    def test_excludes_hubei_and_unknown(self):
        db, labels = make_db(
            [
                ("A", A, SubCategory.HUBEI),
                ("B", A, SubCategory.RELATIVE),
                ("C", A, SubCategory.BUS),
                ("D", A, SubCategory.UNKNOWN),
            ]
        )
        snapshot = weekly_snapshots(db, labels)[0]
        assert local_transmission_share(snapshot) == pytest.approx(50.0, abs=1e-9)

    def test_all_unknown_gives_zero(self):
        db, labels = make_db([("A", A, SubCategory.UNKNOWN)])
        snapshot = weekly_snapshots(db, labels)[0]
        assert local_transmission_share(snapshot) == 0.0

    def test_reference_mix_sums_to_its_local_block(self):
        # Hand-built snapshot with a known percentage table; the local
        # share is the sum of the twelve non-hubei, non-unknown entries.
        percentages = {
            SubCategory.RESTAURANT: 11.67,
            SubCategory.SUPERMARKET: 0.09,
            SubCategory.HOSPITAL: 3.75,
            SubCategory.HOTEL: 0.24,
            SubCategory.SHOPPING_MALL: 0.09,
            SubCategory.RESIDENTIAL: 0.15,
            SubCategory.NURSING_HOME: 0.09,
            SubCategory.PRIVATE_VEHICLE: 13.68,
            SubCategory.TRAIN: 2.19,
            SubCategory.AIRPORT: 1.68,
            SubCategory.BUS: 2.36,
            SubCategory.RELATIVE: 27.39,
            SubCategory.HUBEI: 34.13,
            SubCategory.UNKNOWN: 2.48,
        }
        snapshot = WeeklySnapshot(
            week_index=1,
            window=(A, A + timedelta(days=7)),
            counts={leaf: 0 for leaf in LEAVES},
            percentages=percentages,
        )
        assert local_transmission_share(snapshot) == pytest.approx(63.38, abs=1e-9)


class TestDailySeries:
    def test_single_case(self):
        db, labels = make_db([("A", A, SubCategory.HUBEI)])
        series = daily_series(db, labels)
        assert series.span == (A, A)
        points = series.per_category[Category.HUBEI_TRAVEL]
        assert len(points) == 1
        assert points[0].new_cases == 1
        assert points[0].cumulative == 1

    def test_gaps_are_zero_filled(self):
        db, labels = make_db(
            [("A", A, SubCategory.HUBEI), ("B", A + timedelta(days=4), SubCategory.HUBEI)]
        )
        series = daily_series(db, labels)
        points = series.per_category[Category.HUBEI_TRAVEL]
        assert [p.new_cases for p in points] == [1, 0, 0, 0, 1]
        assert [p.cumulative for p in points] == [1, 1, 1, 1, 2]
        assert [p.day for p in points] == [A + timedelta(days=i) for i in range(5)]

    def test_every_category_spans_the_full_range(self):
        db, labels = make_db(
            [("A", A, SubCategory.HUBEI), ("B", A + timedelta(days=9), SubCategory.BUS)]
        )
        series = daily_series(db, labels)
        for category in Category:
            assert len(series.per_category[category]) == 10

    def test_final_cumulative_matches_totals(self):
        db, labels = make_db(
            [
                ("A", A, SubCategory.HUBEI),
                ("B", A + timedelta(days=2), SubCategory.HUBEI),
                ("C", A + timedelta(days=5), SubCategory.RELATIVE),
            ]
        )
        series = daily_series(db, labels)
        assert series.per_category[Category.HUBEI_TRAVEL][-1].cumulative == 2
        assert series.per_category[Category.RELATIVE][-1].cumulative == 1
        assert series.per_category[Category.SOCIAL][-1].cumulative == 0

    def test_empty_corpus_rejected(self):
        db, labels = make_db([])
        with pytest.raises(ValueError):
            daily_series(db, labels)

    def test_peak_date_earliest_argmax(self):
        db, labels = make_db(
            [
                ("A", A, SubCategory.HUBEI),
                ("B", A + timedelta(days=3), SubCategory.HUBEI),
                ("C", A + timedelta(days=3), SubCategory.HUBEI),
                ("D", A + timedelta(days=6), SubCategory.HUBEI),
                ("E", A + timedelta(days=6), SubCategory.HUBEI),
            ]
        )
        series = daily_series(db, labels)
        # Days 3 and 6 tie at two new cases; the earlier day wins.
        assert peak_date(series, Category.HUBEI_TRAVEL) == A + timedelta(days=3)


class TestSpatialTable:
    def test_counts_partition_by_province_and_city(self):
        db, labels = make_db(
            [
                ("A", A, SubCategory.HUBEI, "Guangdong", "Shenzhen"),
                ("B", A, SubCategory.RELATIVE, "Guangdong", "Guangzhou"),
                ("C", A, SubCategory.HUBEI, "Hunan", "Changsha"),
            ]
        )
        table = spatial_table(db, labels)
        assert list(table.provinces) == ["Guangdong", "Hunan"]
        assert table.provinces["Guangdong"][Category.HUBEI_TRAVEL] == 1
        assert table.provinces["Guangdong"][Category.RELATIVE] == 1
        assert table.total == 3
        assert table.cities[("Guangdong", "Shenzhen")][Category.HUBEI_TRAVEL] == 1

    def test_city_rows_sum_to_province_rows(self):
        db, labels = make_db(
            [
                ("A", A, SubCategory.HUBEI, "Guangdong", "Shenzhen"),
                ("B", A, SubCategory.HUBEI, "Guangdong", "Guangzhou"),
                ("C", A, SubCategory.BUS, "Guangdong", "Shenzhen"),
            ]
        )
        table = spatial_table(db, labels)
        for category in Category:
            city_sum = sum(
                row[category] for (province, _), row in table.cities.items() if province == "Guangdong"
            )
            assert city_sum == table.provinces["Guangdong"][category]


class TestDelayStats:
    def db_with_delays(self, delays, undated=0):
        rows = {}
        for i, delay in enumerate(delays):
            onset = A
            rows[f"D{i}"] = make_report(
                id=f"D{i}",
                report_date=A + timedelta(days=delay),
                symptom_onset_date=onset,
                hospital_admission_date=onset + timedelta(days=delay),
            )
        for i in range(undated):
            rows[f"U{i}"] = make_report(id=f"U{i}", report_date=A)
        return TrajectoryDatabase(
            reports=rows, edges=[], meta=CorpusMeta(source="test", record_count=len(rows), ingested_at="")
        )

    def test_histogram_and_fraction(self):
        stats = admission_delay_stats(self.db_with_delays([1, 2, 3, 6]))
        assert stats.histogram == {1: 1, 2: 1, 3: 1, 6: 1}
        assert stats.defined == 4
        assert stats.fraction_within(5) == 0.75

    def test_boundary_is_inclusive(self):
        stats = admission_delay_stats(self.db_with_delays([5, 5]))
        assert stats.fraction_within(5) == 1.0

    def test_undated_cases_excluded_and_counted(self):
        stats = admission_delay_stats(self.db_with_delays([2], undated=3))
        assert stats.defined == 1
        assert stats.excluded == 3

    def test_no_defined_delays_gives_none(self):
        stats = admission_delay_stats(self.db_with_delays([], undated=2))
        assert stats.fraction_within(5) is None

    def test_histogram_keys_sorted(self):
        stats = admission_delay_stats(self.db_with_delays([9, 0, 4]))
        assert list(stats.histogram) == [0, 4, 9]


def haversine_oracle(lat1, lon1, lat2, lon2):
    """Alternative formulation (atan2 form) computed with numpy."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = np.radians(lat2 - lat1)
    dlam = np.radians(lon2 - lon1)
    a = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2) ** 2
    return float(2 * EARTH_RADIUS_KM * np.arctan2(np.sqrt(a), np.sqrt(1 - a)))


class TestHaversine:
    def test_zero_distance(self):
        assert haversine_km(30.59, 114.31, 30.59, 114.31) == 0.0

    def test_matches_atan2_oracle(self):
        pairs = [
            ((30.5928, 114.3055), (39.9042, 116.4074)),  # Wuhan-Beijing
            ((30.5928, 114.3055), (23.1291, 113.2644)),  # Wuhan-Guangzhou
            ((30.5928, 114.3055), (30.2741, 120.1551)),  # Wuhan-Hangzhou
        ]
        for (lat1, lon1), (lat2, lon2) in pairs:
            mine = haversine_km(lat1, lon1, lat2, lon2)
            oracle = haversine_oracle(lat1, lon1, lat2, lon2)
            assert mine == pytest.approx(oracle, abs=0.1)

    def test_symmetry(self):
        assert haversine_km(10, 20, 30, 40) == pytest.approx(haversine_km(30, 40, 10, 20), abs=1e-9)

    def test_antipodal_is_half_circumference(self):
        assert haversine_km(0, 0, 0, 180) == pytest.approx(math.pi * EARTH_RADIUS_KM, abs=1e-6)

    def test_one_degree_latitude(self):
        # One degree of latitude along a meridian: R * pi / 180 km.
        assert haversine_km(0, 0, 1, 0) == pytest.approx(EARTH_RADIUS_KM * math.pi / 180, abs=1e-9)


class TestLoaders:
    def write(self, path, text):
        path.write_text(text, encoding="utf-8")
        return path

    def test_load_coordinates(self, tmp_path):
        path = self.write(
            tmp_path / "coords.csv",
            "# comment line\ncity,lat,lon\nWuhan,30.5928,114.3055\nShenzhen,22.5431,114.0579\n",
        )
        coords = load_coordinates(path)
        assert coords["Wuhan"] == (30.5928, 114.3055)
        assert len(coords) == 2

    def test_load_coordinates_rejects_wrong_header(self, tmp_path):
        path = self.write(tmp_path / "bad.csv", "name,latitude,longitude\nWuhan,1,2\n")
        with pytest.raises(ValueError, match="header"):
            load_coordinates(path)

    def test_load_outflow(self, tmp_path):
        path = self.write(
            tmp_path / "outflow.csv", "city,outflow_fraction\nShenzhen,0.02\nChangsha,0.08\n"
        )
        outflow = load_outflow(path)
        assert outflow == {"Shenzhen": 0.02, "Changsha": 0.08}

    def test_outflow_sum_above_one_rejected(self, tmp_path):
        path = self.write(
            tmp_path / "outflow.csv", "city,outflow_fraction\nA,0.7\nB,0.5\n"
        )
        with pytest.raises(ValueError, match="exceeding 1"):
            load_outflow(path)

    def test_negative_outflow_rejected(self, tmp_path):
        path = self.write(tmp_path / "outflow.csv", "city,outflow_fraction\nA,-0.1\n")
        with pytest.raises(ValueError, match="negative"):
            load_outflow(path)


class TestGeoDataset:
    def test_rows_sorted_by_city_with_distances(self):
        db, _ = make_db(
            [
                ("A", A, SubCategory.HUBEI, "Guangdong", "Shenzhen"),
                ("B", A, SubCategory.HUBEI, "Guangdong", "Shenzhen"),
                ("C", A, SubCategory.HUBEI, "Hubei", "Wuhan"),
            ]
        )
        coords = {"Shenzhen": (22.5431, 114.0579), "Wuhan": (30.5928, 114.3055)}
        geo = build_geo_dataset(db, coords, {"Shenzhen": 0.02, "Wuhan": 0.5})
        assert [row.city for row in geo.rows] == ["Shenzhen", "Wuhan"]
        wuhan = geo.rows[1]
        assert wuhan.distance_km == 0.0
        assert wuhan.reported_cases == 1
        shenzhen = geo.rows[0]
        assert shenzhen.reported_cases == 2
        assert shenzhen.distance_km == pytest.approx(
            haversine_oracle(30.5928, 114.3055, 22.5431, 114.0579), abs=0.1
        )

    def test_missing_coordinates_raise_sorted_list(self):
        db, _ = make_db(
            [
                ("A", A, SubCategory.HUBEI, "Hunan", "Zhuzhou"),
                ("B", A, SubCategory.HUBEI, "Hunan", "Changsha"),
            ]
        )
        with pytest.raises(ValueError, match="Changsha, Zhuzhou"):
            build_geo_dataset(db, {}, {})

    def test_missing_outflow_warns_and_defaults_to_zero(self):
        db, _ = make_db([("A", A, SubCategory.HUBEI, "Hunan", "Changsha")])
        coords = {"Changsha": (28.2282, 112.9388)}
        with pytest.warns(DataWarning, match="Changsha"):
            geo = build_geo_dataset(db, coords, {})
        assert geo.rows[0].outflow_fraction == 0.0

    def test_dataset_conversion(self):
        db, _ = make_db(
            [
                ("A", A, SubCategory.HUBEI, "Hunan", "Changsha"),
                ("B", A, SubCategory.HUBEI, "Guangdong", "Shenzhen"),
            ]
        )
        coords = {"Changsha": (28.2282, 112.9388), "Shenzhen": (22.5431, 114.0579)}
        geo = build_geo_dataset(db, coords, {"Changsha": 0.08, "Shenzhen": 0.02})
        data = geo.dataset()
        assert data.feature_names == ("distance_km", "outflow_fraction")
        assert data.x.shape == (2, 2)
        assert np.array_equal(data.y, [1.0, 1.0])

    def test_without_wuhan_entry_falls_back_to_fixed_reference(self):
        db, _ = make_db([("A", A, SubCategory.HUBEI, "Hunan", "Changsha")])
        coords = {"Changsha": (28.2282, 112.9388)}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            geo = build_geo_dataset(db, coords, {"Changsha": 0.08})
        expected = haversine_oracle(30.5928, 114.3055, 28.2282, 112.9388)
        assert geo.rows[0].distance_km == pytest.approx(expected, abs=0.1)
