from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from pathlib import Path

import pytest

from covtrace.cases import CaseReport, InfectionLabel
from covtrace.classify import classify_case, default_rules
from covtrace.ingest import TrajectoryDatabase, parse_corpus
from covtrace.synth import GroundTruthLedger, generate, golden_scenario
from covtrace.taxonomy import SubCategory, parent_of


def make_report(**overrides) -> CaseReport:
    base = dict(
        id="C-001",
        report_date=date(2020, 2, 1),
        province="Hunan",
        city="Changsha",
    )
    base.update(overrides)
    return CaseReport(**base)


def label_for(leaf: SubCategory, score: float = 1.0) -> InfectionLabel:
    return InfectionLabel(parent_of(leaf), leaf, score)


@dataclass
class GoldenCorpus:
    dir: Path
    corpus_path: Path
    ledger_path: Path
    ledger: GroundTruthLedger
    db: TrajectoryDatabase
    labels: dict[str, InfectionLabel]


@pytest.fixture(scope="session")
def golden(tmp_path_factory) -> GoldenCorpus:
    """The bundled 5000-case scenario, generated, parsed and labeled once."""
    directory = tmp_path_factory.mktemp("golden")
    corpus_path = directory / "corpus.jsonl"
    ledger_path = directory / "ledger.csv"
    _, ledger = generate(golden_scenario(), corpus_path, ledger_path)
    db, summary = parse_corpus(corpus_path)
    assert not summary.rejected, summary.rejected[:3]
    scorer = default_rules()
    labels = {report.id: classify_case(report, scorer) for report in db}
    return GoldenCorpus(
        dir=directory,
        corpus_path=corpus_path,
        ledger_path=ledger_path,
        ledger=ledger,
        db=db,
        labels=labels,
    )
