"""Command-line interface.

Subcommands map one-to-one onto the library's pipelines:

    ingest     parse + validate a corpus, emit summary tables
    classify   label every case, emit labels.csv
    dynamics   weekly/daily/spatial/delay tables
    regress    geographic feature dataset + model comparison
    synth      generate a synthetic corpus and its truth ledger
    report     everything above in one pass, plus rendered figures

Exit codes: 0 on success, 1 on data errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys
from datetime import date
from pathlib import Path

from . import figures, outputs
from .boosting import GbrConfig
from .cases import validate_report
from .classify import LinearTextModel, RuleSet, classify_case, default_rules
from .dynamics import (
    DEFAULT_ANCHOR,
    admission_delay_stats,
    build_geo_dataset,
    daily_series,
    load_coordinates,
    load_outflow,
    local_transmission_share,
    spatial_table,
    weekly_snapshots,
)
from .ingest import parse_corpus
from .metrics import SplitConfig, compare_models
from .synth import golden_scenario, generate


def _parse_iso_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an ISO date: {text!r}") from exc


def _add_corpus_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="line-delimited corpus file")
    parser.add_argument("--edges", help="optional transmission-edge sidecar file")
    parser.add_argument("--output-dir", default=".", help="directory for output files")


def _add_scorer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--scorer", choices=("rules", "linear"), default="rules", help="classifier backend"
    )
    parser.add_argument("--rules-file", help="rule table (JSONL); defaults to the built-in table")
    parser.add_argument("--model-file", help="trained linear model file (required with --scorer linear)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covtrace",
        description="Batch analytics over line-listed case-report corpora.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="parse and validate a corpus")
    _add_corpus_flags(ingest)

    classify = commands.add_parser("classify", help="label infection sources")
    _add_corpus_flags(classify)
    _add_scorer_flags(classify)

    dynamics = commands.add_parser("dynamics", help="temporal and spatial tables")
    _add_corpus_flags(dynamics)
    _add_scorer_flags(dynamics)
    dynamics.add_argument(
        "--anchor",
        type=_parse_iso_date,
        default=DEFAULT_ANCHOR,
        help=f"first weekly window start (default {DEFAULT_ANCHOR.isoformat()})",
    )

    regress = commands.add_parser("regress", help="geographic regression comparison")
    _add_corpus_flags(regress)
    regress.add_argument("--coords", required=True, help="city,lat,lon CSV")
    regress.add_argument("--outflow", required=True, help="city,outflow_fraction CSV")
    _add_gbr_flags(regress)

    synth = commands.add_parser("synth", help="generate a synthetic corpus")
    synth.add_argument("--seed", type=int, default=42)
    synth.add_argument("--cases", type=int, default=5000)
    synth.add_argument("--noise", type=float, default=0.0, help="label noise rate in [0, 0.5)")
    synth.add_argument("--output-dir", default=".")

    report = commands.add_parser("report", help="run every stage and render figures")
    _add_corpus_flags(report)
    _add_scorer_flags(report)
    report.add_argument("--anchor", type=_parse_iso_date, default=DEFAULT_ANCHOR)
    report.add_argument("--coords", help="city,lat,lon CSV (enables the regression stage)")
    report.add_argument("--outflow", help="city,outflow_fraction CSV")
    _add_gbr_flags(report)
    return parser


def _add_gbr_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gbr-stages", type=int, default=100)
    parser.add_argument("--gbr-depth", type=int, default=3)
    parser.add_argument("--gbr-shrinkage", type=float, default=0.1)
    parser.add_argument("--loss", choices=("squared", "absolute"), default="squared")
    parser.add_argument("--seed", type=int, default=0, help="train/test split seed")


def _load_scorer(args: argparse.Namespace):
    if args.scorer == "linear":
        if not args.model_file:
            raise ValueError("--scorer linear requires --model-file")
        return LinearTextModel.load(args.model_file)
    if args.rules_file:
        return RuleSet.load(args.rules_file)
    return default_rules()


def _out_dir(args: argparse.Namespace) -> Path:
    directory = Path(args.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _corpus_violations(db) -> dict:
    present = [
        value
        for report in db
        for value in (
            report.report_date,
            report.symptom_onset_date,
            report.hospital_admission_date,
            report.confirmation_date,
            report.exposure_date,
        )
        if value is not None
    ]
    violations = {}
    for report in db:
        found = validate_report(report, end_date=max(present)) if present else validate_report(report)
        if found:
            violations[report.id] = found
    return violations


def _run_ingest(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    db, summary = parse_corpus(args.input, args.edges)
    violations = _corpus_violations(db)
    violation_count = sum(len(v) for v in violations.values())
    outputs.write_ingest_summary(summary, violation_count, out / "ingest_summary.csv")
    outputs.write_rejects(summary, out / "rejects.csv")
    outputs.write_validation(violations, out / "validation.csv")
    print(
        f"read {summary.lines_read} lines: {summary.accepted} accepted, "
        f"{len(summary.rejected)} rejected; {summary.edges_accepted} edges; "
        f"{summary.dangling_contacts} dangling contacts; "
        f"{violation_count} validation violations"
    )
    return 0


def _labels_for(db, scorer):
    return {report.id: classify_case(report, scorer) for report in db}


def _run_classify(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    db, _ = parse_corpus(args.input, args.edges)
    labels = _labels_for(db, _load_scorer(args))
    outputs.write_labels(labels, out / "labels.csv")
    print(f"labeled {len(labels)} cases -> {out / 'labels.csv'}")
    return 0


def _run_dynamics(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    db, _ = parse_corpus(args.input, args.edges)
    if len(db) == 0:
        raise ValueError("corpus is empty; nothing to aggregate")
    labels = _labels_for(db, _load_scorer(args))
    snapshots = weekly_snapshots(db, labels, anchor=args.anchor)
    series = daily_series(db, labels)
    table = spatial_table(db, labels)
    delays = admission_delay_stats(db)
    outputs.write_table1(snapshots, out / "table1.csv")
    outputs.write_daily(series, out / "daily.csv")
    outputs.write_spatial(table, out / "spatial.csv")
    outputs.write_spatial_cities(table, out / "spatial_cities.csv")
    outputs.write_delays(delays, out / "delays.csv")
    final = snapshots[-1]
    share = local_transmission_share(final)
    within = delays.fraction_within(5)
    print(
        f"{len(snapshots)} weekly snapshots over {final.total} cases; "
        f"final local transmission share {share:.2f}%; "
        + (
            f"{100 * within:.1f}% admitted within 5 days "
            f"({delays.excluded} cases lacked dates)"
            if within is not None
            else "no dated admissions"
        )
    )
    return 0


def _geo_and_comparison(args: argparse.Namespace, db):
    geo = build_geo_dataset(db, load_coordinates(args.coords), load_outflow(args.outflow))
    gbr = GbrConfig(
        stages=args.gbr_stages,
        max_depth=args.gbr_depth,
        shrinkage=args.gbr_shrinkage,
        loss=args.loss,
        seed=args.seed,
    )
    rows = compare_models(geo.dataset(), SplitConfig(seed=args.seed), gbr=gbr)
    return geo, rows


def _run_regress(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    db, _ = parse_corpus(args.input, args.edges)
    geo, rows = _geo_and_comparison(args, db)
    outputs.write_geo_dataset(geo, out / "geo_dataset.csv")
    outputs.write_comparison(rows, out / "comparison.csv")
    best = min(rows, key=lambda r: r.held_out.mse)
    print(f"compared {len(rows)} models on {len(geo.rows)} cities; lowest held-out mse: {best.model}")
    return 0


def _run_synth(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    config = golden_scenario(seed=args.seed, cases=args.cases, noise_rate=args.noise)
    corpus_path, ledger = generate(config, out / "corpus.jsonl", out / "ledger.csv")
    print(f"generated {len(ledger.entries)} cases -> {corpus_path}")
    return 0


def _run_report(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    db, summary = parse_corpus(args.input, args.edges)
    if len(db) == 0:
        raise ValueError("corpus is empty; nothing to report")
    violations = _corpus_violations(db)
    outputs.write_ingest_summary(
        summary, sum(len(v) for v in violations.values()), out / "ingest_summary.csv"
    )
    outputs.write_rejects(summary, out / "rejects.csv")
    outputs.write_validation(violations, out / "validation.csv")

    labels = _labels_for(db, _load_scorer(args))
    outputs.write_labels(labels, out / "labels.csv")

    snapshots = weekly_snapshots(db, labels, anchor=args.anchor)
    series = daily_series(db, labels)
    table = spatial_table(db, labels)
    delays = admission_delay_stats(db)
    outputs.write_table1(snapshots, out / "table1.csv")
    outputs.write_daily(series, out / "daily.csv")
    outputs.write_spatial(table, out / "spatial.csv")
    outputs.write_spatial_cities(table, out / "spatial_cities.csv")
    outputs.write_delays(delays, out / "delays.csv")
    figures.render_weekly(snapshots, out / "weekly.png")
    figures.render_daily(series, out / "daily.png")
    figures.render_spatial(table, out / "spatial.png")
    figures.render_delays(delays, out / "delays.png")

    if args.coords and args.outflow:
        geo, rows = _geo_and_comparison(args, db)
        outputs.write_geo_dataset(geo, out / "geo_dataset.csv")
        outputs.write_comparison(rows, out / "comparison.csv")
        figures.render_geo(geo, out / "geo.png")
        figures.render_comparison(rows, out / "comparison.png")
    elif args.coords or args.outflow:
        raise ValueError("the regression stage needs both --coords and --outflow")
    else:
        print("no --coords/--outflow given; skipping the regression stage", file=sys.stderr)

    print(f"report written to {out}")
    return 0


_RUNNERS = {
    "ingest": _run_ingest,
    "classify": _run_classify,
    "dynamics": _run_dynamics,
    "regress": _run_regress,
    "synth": _run_synth,
    "report": _run_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _RUNNERS[args.command](args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
