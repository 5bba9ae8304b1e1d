"""Deterministic synthetic corpus generation with a ground-truth ledger.

Every draw comes from one seeded generator consumed in a fixed order, so a
given config always produces byte-identical corpus and ledger files.
Category totals, label noise, provinces and admission delays are planted
by largest-remainder apportionment rather than independent sampling, which
pins the realized aggregates to the configured ones up to rounding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .cases import CaseReport, ContactRecord, Gender, Relationship, TravelHistory
from .classify import _NARRATIVE_PATTERNS
from .ingest import CorpusMeta, TrajectoryDatabase, serialize_corpus
from .taxonomy import CATEGORIES, LEAVES, Category, SubCategory, parent_of

# How many days of slack the planted date chains need below the span start
# (maximum admission delay plus maximum incubation).
_INCUBATION_MAX = 10
_CONFIRM_LAG_MAX = 2

# Narrative filler; deliberately free of every content word used by the
# default rule patterns so fillers can never trigger a rule.
_FILLERS = (
    "symptoms were mild on arrival and monitoring continued",
    "officials logged the notification for provincial records",
    "isolation began immediately after testing",
    "no further epidemiological details were released",
    "follow up interviews are still being arranged",
    "the individual remains under routine medical observation",
)

_PHRASES_BY_LEAF: dict[SubCategory, list[str]] = {}
for _pattern, _leaf in _NARRATIVE_PATTERNS:
    _PHRASES_BY_LEAF.setdefault(_leaf, []).append(_pattern)

# One representative city per province for the default scenarios.
CITY_OF_PROVINCE = {
    "Anhui": "Hefei",
    "Chongqing": "Chongqing",
    "Guangdong": "Guangzhou",
    "Henan": "Zhengzhou",
    "Hunan": "Changsha",
    "Jiangsu": "Nanjing",
    "Jiangxi": "Nanchang",
    "Shandong": "Jinan",
    "Zhejiang": "Hangzhou",
}

_LOCATION_CONTACT_LEAVES = {
    leaf
    for leaf in LEAVES
    if parent_of(leaf) in (Category.SOCIAL, Category.PUBLIC_TRANSIT)
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a synthetic scenario needs to be reproducible."""

    seed: int
    cases: int
    leaf_mix: Mapping[SubCategory, float]
    province_mix: Mapping[str, float]
    start_date: date
    end_date: date
    category_peaks: Mapping[Category, date]
    noise_rate: float = 0.0
    delay_within_fraction: float = 0.79
    delay_within_days: int = 5
    delay_max_days: int = 14
    chain_shapes: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        _validate(self)


@dataclass(frozen=True)
class LedgerEntry:
    case_id: str
    true_leaf: SubCategory
    evidence_leaf: SubCategory
    province: str
    report_date: date
    admission_delay: int
    chain_id: int | None


@dataclass
class GroundTruthLedger:
    """Planted truth for every generated case, plus aggregate views."""

    config: ScenarioConfig
    entries: list[LedgerEntry] = field(default_factory=list)

    def true_leaf_counts(self) -> dict[SubCategory, int]:
        counts = {leaf: 0 for leaf in LEAVES}
        for entry in self.entries:
            counts[entry.true_leaf] += 1
        return counts

    def realized_noise(self) -> float:
        if not self.entries:
            return 0.0
        corrupted = sum(1 for e in self.entries if e.evidence_leaf is not e.true_leaf)
        return corrupted / len(self.entries)

    def delay_fraction_within(self, days: int) -> float:
        within = sum(1 for e in self.entries if e.admission_delay <= days)
        return within / len(self.entries)

    def realized_peak(self, category: Category) -> date:
        """Earliest modal report date among cases whose true category matches."""
        counts: dict[date, int] = {}
        for entry in self.entries:
            if parent_of(entry.true_leaf) is category:
                counts[entry.report_date] = counts.get(entry.report_date, 0) + 1
        best = max(counts.values())
        return min(day for day, count in counts.items() if count == best)

    def chain_members(self) -> dict[int, list[str]]:
        chains: dict[int, list[str]] = {}
        for entry in self.entries:
            if entry.chain_id is not None:
                chains.setdefault(entry.chain_id, []).append(entry.case_id)
        return chains

    def save_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
            handle.write("# covtrace ledger v1\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(
                [
                    "case_id",
                    "true_leaf",
                    "evidence_leaf",
                    "province",
                    "report_date",
                    "admission_delay",
                    "chain_id",
                ]
            )
            for e in self.entries:
                writer.writerow(
                    [
                        e.case_id,
                        e.true_leaf.value,
                        e.evidence_leaf.value,
                        e.province,
                        e.report_date.isoformat(),
                        e.admission_delay,
                        "" if e.chain_id is None else e.chain_id,
                    ]
                )


def apportion(total: int, weights: Sequence[float]) -> list[int]:
    """Largest-remainder integer apportionment of ``total`` by ``weights``."""
    quotas = [total * w for w in weights]
    counts = [math.floor(q) for q in quotas]
    leftover = total - sum(counts)
    by_remainder = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def _validate(config: ScenarioConfig) -> None:
    if config.cases < 1:
        raise ValueError(f"cases must be >= 1: {config.cases}")
    for leaf in config.leaf_mix:
        SubCategory(leaf)
    for mix_name, mix in (("leaf_mix", config.leaf_mix), ("province_mix", config.province_mix)):
        if not mix:
            raise ValueError(f"{mix_name} is empty")
        if any(w < 0 for w in mix.values()):
            raise ValueError(f"{mix_name} has negative weights")
        total = sum(mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"{mix_name} weights sum to {total}, expected 1")
    if not 0.0 <= config.noise_rate < 0.5:
        raise ValueError(f"noise_rate must lie in [0, 0.5): {config.noise_rate}")
    if not 0.0 <= config.delay_within_fraction <= 1.0:
        raise ValueError(f"delay_within_fraction must lie in [0, 1]: {config.delay_within_fraction}")
    if not 0 <= config.delay_within_days < config.delay_max_days:
        raise ValueError(
            f"need 0 <= delay_within_days < delay_max_days, got "
            f"{config.delay_within_days} and {config.delay_max_days}"
        )
    if config.start_date > config.end_date:
        raise ValueError(f"start_date {config.start_date} is after end_date {config.end_date}")
    floor_needed = config.start_date - timedelta(days=config.delay_max_days + _INCUBATION_MAX)
    if floor_needed < date(2019, 12, 1):
        raise ValueError(
            f"start_date {config.start_date} leaves no room for planted onset and "
            "exposure dates above 2019-12-01"
        )
    for category, peak in config.category_peaks.items():
        Category(category)
        if not config.start_date <= peak <= config.end_date:
            raise ValueError(f"peak for {category} ({peak}) outside the date span")
    if any(size < 2 for size in config.chain_shapes):
        raise ValueError("every chain shape needs at least 2 members")
    if sum(config.chain_shapes) > config.cases:
        raise ValueError(
            f"chain shapes need {sum(config.chain_shapes)} members but only "
            f"{config.cases} cases are generated"
        )


def _date_weights(day_count: int, peak_offset: int) -> np.ndarray:
    offsets = np.arange(day_count)
    bonus = 19.0 * np.clip(1.0 - np.abs(offsets - peak_offset) / 4.0, 0.0, None)
    weights = 1.0 + bonus
    return weights / weights.sum()


def generate(
    config: ScenarioConfig,
    corpus_path: str | Path,
    ledger_path: str | Path | None = None,
) -> tuple[Path, GroundTruthLedger]:
    """Generate one corpus file (plus optional ledger CSV).

    Returns the corpus path and the in-memory ledger. Identical configs
    produce byte-identical files.
    """
    rng = np.random.default_rng(config.seed)
    n = config.cases

    mix_leaves = [leaf for leaf in LEAVES if config.leaf_mix.get(leaf, 0.0) > 0.0]
    leaf_counts = apportion(n, [config.leaf_mix[leaf] for leaf in mix_leaves])
    pool: list[SubCategory] = []
    for leaf, count in zip(mix_leaves, leaf_counts):
        pool.extend([leaf] * count)
    order = rng.permutation(n)
    true_leaves = [pool[i] for i in order]

    corrupted_count = apportion(n, [config.noise_rate, 1.0 - config.noise_rate])[0]
    corrupted = set(rng.choice(n, size=corrupted_count, replace=False).tolist())
    evidence_leaves: list[SubCategory] = []
    for i in range(n):
        if i in corrupted:
            others = [leaf for leaf in LEAVES if leaf is not true_leaves[i]]
            evidence_leaves.append(others[int(rng.integers(0, len(others)))])
        else:
            evidence_leaves.append(true_leaves[i])

    province_names = sorted(config.province_mix)
    province_counts = apportion(n, [config.province_mix[p] for p in province_names])
    province_pool: list[str] = []
    for name, count in zip(province_names, province_counts):
        province_pool.extend([name] * count)
    province_order = rng.permutation(n)
    provinces = [province_pool[i] for i in province_order]

    day_count = (config.end_date - config.start_date).days + 1
    midpoint = config.start_date + timedelta(days=day_count // 2)
    report_dates: list[date | None] = [None] * n
    for category in CATEGORIES:
        indices = [i for i in range(n) if parent_of(true_leaves[i]) is category]
        if not indices:
            continue
        peak = config.category_peaks.get(category, midpoint)
        weights = _date_weights(day_count, (peak - config.start_date).days)
        offsets = rng.choice(day_count, size=len(indices), p=weights)
        for i, offset in zip(indices, offsets):
            report_dates[i] = config.start_date + timedelta(days=int(offset))

    within_count = apportion(
        n, [config.delay_within_fraction, 1.0 - config.delay_within_fraction]
    )[0]
    within_flags = [True] * within_count + [False] * (n - within_count)
    flag_order = rng.permutation(n)
    within_flags = [within_flags[i] for i in flag_order]
    delays = [
        int(rng.integers(0, config.delay_within_days + 1))
        if flag
        else int(rng.integers(config.delay_within_days + 1, config.delay_max_days + 1))
        for flag in within_flags
    ]

    chain_of: dict[int, int] = {}
    successor: dict[int, int] = {}
    predecessor: dict[int, int] = {}
    if config.chain_shapes:
        members = rng.choice(n, size=sum(config.chain_shapes), replace=False).tolist()
        cursor = 0
        for chain_id, size in enumerate(config.chain_shapes):
            chain = members[cursor : cursor + size]
            cursor += size
            for position, case_index in enumerate(chain):
                chain_of[case_index] = chain_id
                if position > 0:
                    predecessor[case_index] = chain[position - 1]
                if position < size - 1:
                    successor[case_index] = chain[position + 1]

    width = max(5, len(str(n - 1)))
    ids = [f"SYN-{i:0{width}d}" for i in range(n)]
    reports: dict[str, CaseReport] = {}
    ledger = GroundTruthLedger(config=config)
    for i in range(n):
        evidence = evidence_leaves[i]
        report_day = report_dates[i]
        assert report_day is not None
        onset = report_day - timedelta(days=delays[i])
        exposure = onset - timedelta(days=int(rng.integers(2, _INCUBATION_MAX + 1)))
        confirmation = report_day + timedelta(days=int(rng.integers(0, _CONFIRM_LAG_MAX + 1)))

        sentences = [_FILLERS[int(rng.integers(0, len(_FILLERS)))]]
        if evidence is not SubCategory.UNKNOWN and evidence is not SubCategory.HUBEI:
            phrases = _PHRASES_BY_LEAF[evidence]
            sentences.append(phrases[int(rng.integers(0, len(phrases)))])
        if evidence is SubCategory.HUBEI:
            phrases = _PHRASES_BY_LEAF[SubCategory.HUBEI]
            sentences.append(phrases[int(rng.integers(0, len(phrases)))])
            travel = TravelHistory.WUHAN
        else:
            travel = (TravelHistory.NONE, TravelHistory.OTHER_CITY, TravelHistory.UNKNOWN)[
                int(rng.integers(0, 3))
            ]
        sentences.append(_FILLERS[int(rng.integers(0, len(_FILLERS)))])
        narrative = ". ".join(s.capitalize() for s in sentences) + "."

        contacts: list[ContactRecord] = []
        if evidence is SubCategory.RELATIVE and rng.random() < 0.7:
            contacts.append(
                ContactRecord(
                    relationship=Relationship.RELATIVE,
                    contact_date=onset - timedelta(days=2),
                )
            )
        elif evidence in _LOCATION_CONTACT_LEAVES and rng.random() < 0.7:
            relationship = (Relationship.STRANGER, Relationship.FRIEND, Relationship.COWORKER)[
                int(rng.integers(0, 3))
            ]
            contacts.append(
                ContactRecord(
                    relationship=relationship,
                    location_kind=evidence,
                    contact_date=onset - timedelta(days=2),
                )
            )
        if i in predecessor:
            contacts.append(
                ContactRecord(
                    contact_case_id=ids[predecessor[i]],
                    contact_date=onset - timedelta(days=2),
                )
            )

        gender = (Gender.MALE, Gender.FEMALE, Gender.UNKNOWN)[
            int(rng.choice(3, p=[0.48, 0.48, 0.04]))
        ]
        conditions: tuple[str, ...] = ()
        roll = rng.random()
        if roll < 0.12:
            conditions = ("hypertension",)
        elif roll < 0.18:
            conditions = ("diabetes",)

        reports[ids[i]] = CaseReport(
            id=ids[i],
            report_date=report_day,
            province=provinces[i],
            city=CITY_OF_PROVINCE.get(provinces[i], f"{provinces[i]} City"),
            age=int(rng.integers(1, 91)),
            gender=gender,
            travel_history=travel,
            narrative=narrative,
            symptom_onset_date=onset,
            hospital_admission_date=report_day,
            confirmation_date=confirmation,
            exposure_date=exposure,
            contacts=tuple(contacts),
            chronic_conditions=conditions,
            transmissions_initiated=(1 if i in successor else 0) if i in chain_of else None,
        )
        ledger.entries.append(
            LedgerEntry(
                case_id=ids[i],
                true_leaf=true_leaves[i],
                evidence_leaf=evidence,
                province=provinces[i],
                report_date=report_day,
                admission_delay=delays[i],
                chain_id=chain_of.get(i),
            )
        )

    corpus_path = Path(corpus_path)
    db = TrajectoryDatabase(
        reports=reports,
        edges=[],
        meta=CorpusMeta(source="synthetic", record_count=len(reports), ingested_at=""),
    )
    serialize_corpus(db, corpus_path)
    if ledger_path is not None:
        ledger.save_csv(ledger_path)
    return corpus_path, ledger


# Default five-week scenario mix: leaf shares in percent, normalized below.
_DEFAULT_MIX_PERCENT: dict[SubCategory, float] = {
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

DEFAULT_PROVINCE_MIX: dict[str, float] = {
    "Guangdong": 0.18,
    "Zhejiang": 0.16,
    "Henan": 0.15,
    "Hunan": 0.12,
    "Anhui": 0.10,
    "Jiangxi": 0.10,
    "Shandong": 0.07,
    "Jiangsu": 0.06,
    "Chongqing": 0.06,
}

DEFAULT_PEAKS: dict[Category, date] = {
    Category.HUBEI_TRAVEL: date(2020, 1, 26),
    Category.PUBLIC_TRANSIT: date(2020, 2, 2),
    Category.SOCIAL: date(2020, 2, 8),
    Category.RELATIVE: date(2020, 2, 8),
    Category.UNKNOWN: date(2020, 2, 5),
}


def default_leaf_mix() -> dict[SubCategory, float]:
    total = sum(_DEFAULT_MIX_PERCENT.values())
    return {leaf: share / total for leaf, share in _DEFAULT_MIX_PERCENT.items()}


def golden_scenario(seed: int = 42, cases: int = 5000, noise_rate: float = 0.0) -> ScenarioConfig:
    """The bundled reference scenario: a five-week 5000-case outbreak."""
    return ScenarioConfig(
        seed=seed,
        cases=cases,
        leaf_mix=default_leaf_mix(),
        province_mix=dict(DEFAULT_PROVINCE_MIX),
        start_date=date(2020, 1, 18),
        end_date=date(2020, 2, 21),
        category_peaks=dict(DEFAULT_PEAKS),
        noise_rate=noise_rate,
        delay_within_fraction=0.79,
        delay_within_days=5,
        delay_max_days=14,
        chain_shapes=(4, 3, 3),
    )
