"""Corpus ingestion: line-delimited JSON parsing, the in-memory trajectory
store, canonical serialization, and transmission-chain assembly.

A corpus file holds one JSON object per line (one case report each); an
optional sidecar file holds explicit transmission edges in the same format.
Malformed lines never abort a parse: they are rejected with their line
number and ingestion continues.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterator

from .cases import (
    CaseReport,
    ContactRecord,
    Gender,
    Relationship,
    TransmissionEdge,
    TravelHistory,
)
from .taxonomy import SubCategory


class ConsistencyWarning(UserWarning):
    """Stored value disagrees with what the corpus graph implies."""


_ISO_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")

_REPORT_KEYS = (
    "id",
    "report_date",
    "province",
    "city",
    "age",
    "gender",
    "travel_history",
    "narrative",
    "symptom_onset_date",
    "hospital_admission_date",
    "confirmation_date",
    "exposure_date",
    "contacts",
    "chronic_conditions",
    "transmissions_initiated",
)
_REQUIRED_KEYS = ("id", "report_date", "province", "city")
_CONTACT_KEYS = ("contact_case_id", "relationship", "location_kind", "contact_date")
_EDGE_KEYS = ("infector_id", "infectee_id", "relationship", "location_kind", "contact_date")


class _LineError(ValueError):
    """Internal: one rejected line with a human-readable reason."""


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    reason: str


@dataclass
class ParseSummary:
    """What happened during one ingest pass."""

    lines_read: int = 0
    accepted: int = 0
    rejected: list[RejectedLine] = field(default_factory=list)
    edge_lines_read: int = 0
    edges_accepted: int = 0
    edges_rejected: list[RejectedLine] = field(default_factory=list)
    dangling_contacts: int = 0


@dataclass(frozen=True)
class CorpusMeta:
    source: str
    record_count: int
    ingested_at: str


@dataclass
class TrajectoryDatabase:
    """All parsed reports plus explicit transmission edges.

    Reports are keyed by case id and always iterate in id order, so every
    downstream computation is deterministic regardless of input line order.
    """

    reports: dict[str, CaseReport]
    edges: list[TransmissionEdge]
    meta: CorpusMeta

    def __post_init__(self) -> None:
        self.reports = dict(sorted(self.reports.items()))

    def __len__(self) -> int:
        return len(self.reports)

    def __iter__(self) -> Iterator[CaseReport]:
        return iter(self.reports.values())

    def case_ids(self) -> list[str]:
        return list(self.reports)


def _parse_date(value: object, key: str) -> date:
    if not isinstance(value, str) or not _ISO_DATE.match(value):
        raise _LineError(f"invalid date in {key!r}: {value!r}")
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise _LineError(f"invalid date in {key!r}: {value!r}") from None


def _parse_enum(value: object, enum_cls: type, key: str):
    if not isinstance(value, str):
        raise _LineError(f"invalid {key!r}: {value!r}")
    try:
        return enum_cls(value)
    except ValueError:
        raise _LineError(f"invalid {key!r}: {value!r}") from None


def _parse_str(value: object, key: str) -> str:
    if not isinstance(value, str):
        raise _LineError(f"{key!r} must be a string: {value!r}")
    return value


def _parse_contact(obj: object) -> ContactRecord:
    if not isinstance(obj, dict):
        raise _LineError(f"contact entry must be an object: {obj!r}")
    for key in obj:
        if key not in _CONTACT_KEYS:
            raise _LineError(f"unknown contact key {key!r}")
    kwargs: dict = {}
    if obj.get("contact_case_id") is not None:
        kwargs["contact_case_id"] = _parse_str(obj["contact_case_id"], "contact_case_id")
    if obj.get("relationship") is not None:
        kwargs["relationship"] = _parse_enum(obj["relationship"], Relationship, "relationship")
    if obj.get("location_kind") is not None:
        kwargs["location_kind"] = _parse_enum(obj["location_kind"], SubCategory, "location_kind")
    if obj.get("contact_date") is not None:
        kwargs["contact_date"] = _parse_date(obj["contact_date"], "contact_date")
    return ContactRecord(**kwargs)


def _parse_report(obj: object) -> CaseReport:
    if not isinstance(obj, dict):
        raise _LineError("record is not a JSON object")
    for key in obj:
        if key not in _REPORT_KEYS:
            raise _LineError(f"unknown key {key!r}")
    for key in _REQUIRED_KEYS:
        if obj.get(key) is None:
            raise _LineError(f"missing required key {key!r}")

    kwargs: dict = {
        "id": _parse_str(obj["id"], "id"),
        "report_date": _parse_date(obj["report_date"], "report_date"),
        "province": _parse_str(obj["province"], "province"),
        "city": _parse_str(obj["city"], "city"),
    }
    if obj.get("age") is not None:
        age = obj["age"]
        if isinstance(age, bool) or not isinstance(age, int):
            raise _LineError(f"'age' must be an integer: {age!r}")
        kwargs["age"] = age
    if obj.get("gender") is not None:
        kwargs["gender"] = _parse_enum(obj["gender"], Gender, "gender")
    if obj.get("travel_history") is not None:
        kwargs["travel_history"] = _parse_enum(obj["travel_history"], TravelHistory, "travel_history")
    if obj.get("narrative") is not None:
        kwargs["narrative"] = _parse_str(obj["narrative"], "narrative")
    for key in ("symptom_onset_date", "hospital_admission_date", "confirmation_date", "exposure_date"):
        if obj.get(key) is not None:
            kwargs[key] = _parse_date(obj[key], key)
    if obj.get("contacts") is not None:
        contacts = obj["contacts"]
        if not isinstance(contacts, list):
            raise _LineError(f"'contacts' must be an array: {contacts!r}")
        kwargs["contacts"] = tuple(_parse_contact(c) for c in contacts)
    if obj.get("chronic_conditions") is not None:
        conditions = obj["chronic_conditions"]
        if not isinstance(conditions, list) or not all(isinstance(c, str) for c in conditions):
            raise _LineError(f"'chronic_conditions' must be an array of strings: {conditions!r}")
        kwargs["chronic_conditions"] = tuple(conditions)
    if obj.get("transmissions_initiated") is not None:
        count = obj["transmissions_initiated"]
        if isinstance(count, bool) or not isinstance(count, int) or count < 0:
            raise _LineError(f"'transmissions_initiated' must be a non-negative integer: {count!r}")
        kwargs["transmissions_initiated"] = count
    return CaseReport(**kwargs)


def _parse_edge(obj: object, reports: dict[str, CaseReport]) -> TransmissionEdge:
    if not isinstance(obj, dict):
        raise _LineError("edge is not a JSON object")
    for key in obj:
        if key not in _EDGE_KEYS:
            raise _LineError(f"unknown key {key!r}")
    for key in ("infector_id", "infectee_id"):
        if obj.get(key) is None:
            raise _LineError(f"missing required key {key!r}")
    infector = _parse_str(obj["infector_id"], "infector_id")
    infectee = _parse_str(obj["infectee_id"], "infectee_id")
    for endpoint in (infector, infectee):
        if endpoint not in reports:
            raise _LineError(f"edge endpoint {endpoint!r} does not resolve")
    if infector == infectee:
        raise _LineError(f"self-loop edge on id {infector!r}")
    kwargs: dict = {"infector_id": infector, "infectee_id": infectee}
    if obj.get("relationship") is not None:
        kwargs["relationship"] = _parse_enum(obj["relationship"], Relationship, "relationship")
    if obj.get("location_kind") is not None:
        kwargs["location_kind"] = _parse_enum(obj["location_kind"], SubCategory, "location_kind")
    if obj.get("contact_date") is not None:
        kwargs["contact_date"] = _parse_date(obj["contact_date"], "contact_date")
    return TransmissionEdge(**kwargs)


def parse_corpus(
    path: str | Path, edges_path: str | Path | None = None
) -> tuple[TrajectoryDatabase, ParseSummary]:
    """Parse a line-delimited corpus (and optional edge sidecar).

    Every syntactically valid line becomes one CaseReport. Duplicate ids
    keep the first occurrence; later ones are rejected. Edge lines whose
    endpoints do not resolve, that form self-loops, or that close a
    directed two-cycle on the same contact date are rejected likewise.

    Returns:
        The database plus a ParseSummary listing rejected line numbers,
        reasons and the count of dangling contact ids.
    """
    path = Path(path)
    summary = ParseSummary()
    reports: dict[str, CaseReport] = {}
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            summary.lines_read += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                summary.rejected.append(RejectedLine(line_no, f"invalid JSON: {exc.msg}"))
                continue
            try:
                report = _parse_report(obj)
            except _LineError as exc:
                summary.rejected.append(RejectedLine(line_no, str(exc)))
                continue
            if report.id in reports:
                summary.rejected.append(RejectedLine(line_no, f"duplicate id {report.id!r}"))
                continue
            reports[report.id] = report
            summary.accepted += 1

    edges: list[TransmissionEdge] = []
    if edges_path is not None:
        seen: set[tuple[str, str, date | None]] = set()
        with Path(edges_path).open(encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                summary.edge_lines_read += 1
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    summary.edges_rejected.append(RejectedLine(line_no, f"invalid JSON: {exc.msg}"))
                    continue
                try:
                    edge = _parse_edge(obj, reports)
                except _LineError as exc:
                    summary.edges_rejected.append(RejectedLine(line_no, str(exc)))
                    continue
                if (edge.infectee_id, edge.infector_id, edge.contact_date) in seen:
                    summary.edges_rejected.append(
                        RejectedLine(
                            line_no,
                            f"two-cycle between {edge.infector_id!r} and "
                            f"{edge.infectee_id!r} on the same contact date",
                        )
                    )
                    continue
                seen.add((edge.infector_id, edge.infectee_id, edge.contact_date))
                edges.append(edge)
                summary.edges_accepted += 1

    for report in reports.values():
        for contact in report.contacts:
            if contact.contact_case_id is not None and (
                contact.contact_case_id not in reports
                or contact.contact_case_id == report.id
            ):
                summary.dangling_contacts += 1

    meta = CorpusMeta(
        source=str(path),
        record_count=len(reports),
        ingested_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    return TrajectoryDatabase(reports=reports, edges=edges, meta=meta), summary


def _report_to_obj(report: CaseReport) -> dict:
    obj: dict = {
        "id": report.id,
        "report_date": report.report_date.isoformat(),
        "province": report.province,
        "city": report.city,
    }
    if report.age is not None:
        obj["age"] = report.age
    if report.gender is not Gender.UNKNOWN:
        obj["gender"] = report.gender.value
    if report.travel_history is not TravelHistory.UNKNOWN:
        obj["travel_history"] = report.travel_history.value
    if report.narrative:
        obj["narrative"] = report.narrative
    for key in ("symptom_onset_date", "hospital_admission_date", "confirmation_date", "exposure_date"):
        value = getattr(report, key)
        if value is not None:
            obj[key] = value.isoformat()
    if report.contacts:
        obj["contacts"] = [
            {
                key: value
                for key, value in (
                    ("contact_case_id", c.contact_case_id),
                    (
                        "relationship",
                        c.relationship.value if c.relationship is not Relationship.UNKNOWN else None,
                    ),
                    ("location_kind", c.location_kind.value if c.location_kind else None),
                    ("contact_date", c.contact_date.isoformat() if c.contact_date else None),
                )
                if value is not None
            }
            for c in report.contacts
        ]
    if report.chronic_conditions:
        obj["chronic_conditions"] = list(report.chronic_conditions)
    if report.transmissions_initiated is not None:
        obj["transmissions_initiated"] = report.transmissions_initiated
    return obj


def serialize_corpus(
    db: TrajectoryDatabase,
    path: str | Path,
    edges_path: str | Path | None = None,
) -> None:
    """Write the database back out in canonical line-delimited form.

    Reports are emitted in id order with absent optionals omitted, so the
    output is byte-stable and re-parsing yields a field-for-field identical
    database.
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        for report in db:
            handle.write(json.dumps(_report_to_obj(report), ensure_ascii=False) + "\n")
    if edges_path is not None:
        with Path(edges_path).open("w", encoding="utf-8", newline="\n") as handle:
            for edge in db.edges:
                obj = {
                    key: value
                    for key, value in (
                        ("infector_id", edge.infector_id),
                        ("infectee_id", edge.infectee_id),
                        (
                            "relationship",
                            edge.relationship.value
                            if edge.relationship is not Relationship.UNKNOWN
                            else None,
                        ),
                        ("location_kind", edge.location_kind.value if edge.location_kind else None),
                        ("contact_date", edge.contact_date.isoformat() if edge.contact_date else None),
                    )
                    if value is not None
                }
                handle.write(json.dumps(obj, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class Chain:
    """One weakly-connected transmission chain."""

    members: tuple[str, ...]
    edges: tuple[TransmissionEdge, ...]
    roots: tuple[str, ...]


@dataclass
class ChainSet:
    chains: list[Chain]
    dangling_contacts: int = 0

    def __len__(self) -> int:
        return len(self.chains)

    def membership(self) -> dict[str, int]:
        """Map each case id to the index of its chain."""
        return {m: i for i, chain in enumerate(self.chains) for m in chain.members}


def _edge_sort_key(edge: TransmissionEdge) -> tuple:
    return (
        edge.infector_id,
        edge.infectee_id,
        edge.contact_date.isoformat() if edge.contact_date else "",
        edge.relationship.value,
        edge.location_kind.value if edge.location_kind else "",
    )


def combined_edges(db: TrajectoryDatabase) -> tuple[list[TransmissionEdge], int]:
    """All resolvable directed edges: explicit ones plus contact-derived.

    A contact record with a resolving contact_case_id is read as "the named
    case infected this one". Dangling or self-referential contact ids are
    skipped and counted.
    """
    edges = list(db.edges)
    dangling = 0
    for report in db:
        for contact in report.contacts:
            source = contact.contact_case_id
            if source is None:
                continue
            if source not in db.reports or source == report.id:
                dangling += 1
                continue
            edges.append(
                TransmissionEdge(
                    infector_id=source,
                    infectee_id=report.id,
                    relationship=contact.relationship,
                    location_kind=contact.location_kind,
                    contact_date=contact.contact_date,
                )
            )
    return edges, dangling


def build_chains(db: TrajectoryDatabase) -> ChainSet:
    """Group every case touched by an edge into weakly-connected chains.

    Chains are ordered by their smallest member id, members and roots are
    sorted, and edges are sorted canonically, so the result is independent
    of input line order. Roots are the members with no inbound edge; a
    chain that is one big cycle (possible only with degenerate input data)
    falls back to its smallest member as the designated root.
    """
    edges, dangling = combined_edges(db)
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for edge in edges:
        for node in (edge.infector_id, edge.infectee_id):
            parent.setdefault(node, node)
        union(edge.infector_id, edge.infectee_id)

    groups: dict[str, list[TransmissionEdge]] = {}
    for edge in edges:
        groups.setdefault(find(edge.infector_id), []).append(edge)

    chains: list[Chain] = []
    for root_key in sorted(groups):
        component_edges = sorted(groups[root_key], key=_edge_sort_key)
        members = sorted({e.infector_id for e in component_edges} | {e.infectee_id for e in component_edges})
        infectees = {e.infectee_id for e in component_edges}
        roots = tuple(m for m in members if m not in infectees)
        if not roots:
            roots = (members[0],)
        chains.append(Chain(members=tuple(members), edges=tuple(component_edges), roots=roots))
    return ChainSet(chains=chains, dangling_contacts=dangling)


def transmissions_initiated(db: TrajectoryDatabase, case_id: str) -> int:
    """Out-degree of ``case_id`` in the resolved transmission graph.

    When the report also stores a transmissions_initiated value that
    disagrees, a ConsistencyWarning is emitted and the graph value wins.
    """
    if case_id not in db.reports:
        raise KeyError(case_id)
    edges, _ = combined_edges(db)
    degree = sum(1 for e in edges if e.infector_id == case_id)
    stored = db.reports[case_id].transmissions_initiated
    if stored is not None and stored != degree:
        warnings.warn(
            f"case {case_id!r} stores transmissions_initiated={stored} "
            f"but the graph implies {degree}",
            ConsistencyWarning,
            stacklevel=2,
        )
    return degree
