"""Immutable case-report domain types and per-case derived quantities.

All types here are frozen dataclasses and all operations are pure, so a
corpus can be shared freely across worker processes in batch runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from enum import Enum

from .taxonomy import Category, SubCategory, parent_of

# Plausibility window for every date carried by a report. The ceiling is a
# default for standalone validation; corpus-level validation passes the real
# end of the corpus instead.
DATE_FLOOR = date(2019, 12, 1)
DATE_CEILING = date(2020, 12, 31)

AGE_MIN = 0
AGE_MAX = 120


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"


class TravelHistory(str, Enum):
    WUHAN = "wuhan"
    HUBEI_OTHER = "hubei_other"
    OTHER_CITY = "other_city"
    NONE = "none"
    UNKNOWN = "unknown"


class Relationship(str, Enum):
    RELATIVE = "relative"
    COWORKER = "coworker"
    FRIEND = "friend"
    STRANGER = "stranger"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ContactRecord:
    """A single reported contact of a case."""

    relationship: Relationship = Relationship.UNKNOWN
    contact_case_id: str | None = None
    location_kind: SubCategory | None = None
    contact_date: date | None = None


@dataclass(frozen=True)
class CaseReport:
    """One line-listed case report."""

    id: str
    report_date: date
    province: str
    city: str
    age: int | None = None
    gender: Gender = Gender.UNKNOWN
    travel_history: TravelHistory = TravelHistory.UNKNOWN
    narrative: str = ""
    symptom_onset_date: date | None = None
    hospital_admission_date: date | None = None
    confirmation_date: date | None = None
    exposure_date: date | None = None
    contacts: tuple[ContactRecord, ...] = ()
    chronic_conditions: tuple[str, ...] = ()
    transmissions_initiated: int | None = None


@dataclass(frozen=True)
class InfectionLabel:
    """A classified infection source with its normalized confidence score.

    The (category, subcategory) pair must agree with the taxonomy and the
    score must lie in [0, 1].
    """

    category: Category
    subcategory: SubCategory
    score: float = 0.0

    def __post_init__(self) -> None:
        if parent_of(self.subcategory) is not self.category:
            raise ValueError(
                f"subcategory {self.subcategory.value!r} does not belong to "
                f"category {self.category.value!r}"
            )
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class TransmissionEdge:
    """A directed infector -> infectee transmission event."""

    infector_id: str
    infectee_id: str
    relationship: Relationship = Relationship.UNKNOWN
    location_kind: SubCategory | None = None
    contact_date: date | None = None

    def __post_init__(self) -> None:
        if self.infector_id == self.infectee_id:
            raise ValueError(f"self-loop edge on id {self.infector_id!r}")


@dataclass(frozen=True)
class Violation:
    """One validation finding, keyed by the offending field."""

    field: str
    rule: str


# (attribute, short name) pairs in epidemiological order; consecutive present
# dates must be non-decreasing.
_DATE_CHAIN: tuple[tuple[str, str], ...] = (
    ("exposure_date", "exposure"),
    ("symptom_onset_date", "onset"),
    ("hospital_admission_date", "admission"),
    ("confirmation_date", "confirmation"),
)

_ALL_DATE_FIELDS: tuple[str, ...] = ("report_date",) + tuple(a for a, _ in _DATE_CHAIN)


def validate_report(report: CaseReport, *, end_date: date = DATE_CEILING) -> list[Violation]:
    """Check one report against the per-case invariants.

    Returns an empty list iff every invariant holds. Violations come back
    deterministically ordered by (field, rule). Date-order problems are
    reported against the later field of the offending pair; the derived
    quantities below treat such gaps as absent rather than clamping them.

    Args:
        report: the case to check.
        end_date: inclusive upper bound for every date on the report,
            normally the corpus end date.
    """
    violations: list[Violation] = []
    if not report.id.strip():
        violations.append(Violation("id", "id nonempty"))
    if report.age is not None and not AGE_MIN <= report.age <= AGE_MAX:
        violations.append(Violation("age", "age range"))
    for name in _ALL_DATE_FIELDS:
        value = getattr(report, name)
        if value is not None and not DATE_FLOOR <= value <= end_date:
            violations.append(Violation(name, "date range"))
    previous: tuple[str, str, date] | None = None
    for attr, short in _DATE_CHAIN:
        value = getattr(report, attr)
        if value is None:
            continue
        if previous is not None and value < previous[2]:
            violations.append(
                Violation(attr, f"date order: {previous[1]} ≤ {short}")
            )
        previous = (attr, short, value)
    violations.sort(key=lambda v: (v.field, v.rule))
    return violations


def incubation_period(report: CaseReport) -> int | None:
    """Whole days from exposure to symptom onset, when both dates exist.

    A negative gap is a data error (it also surfaces as a date-order
    violation), so None is returned rather than a clamped value.
    """
    if report.exposure_date is None or report.symptom_onset_date is None:
        return None
    days = (report.symptom_onset_date - report.exposure_date).days
    return days if days >= 0 else None


def admission_delay(report: CaseReport) -> int | None:
    """Whole days from symptom onset to hospital admission, when both exist.

    Negative gaps are treated the same way as in :func:`incubation_period`.
    """
    if report.symptom_onset_date is None or report.hospital_admission_date is None:
        return None
    days = (report.hospital_admission_date - report.symptom_onset_date).days
    return days if days >= 0 else None
