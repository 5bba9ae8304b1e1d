"""Batch analytics for line-listed case-report corpora."""

from .cases import (
    CaseReport,
    ContactRecord,
    Gender,
    InfectionLabel,
    Relationship,
    TransmissionEdge,
    TravelHistory,
    Violation,
    admission_delay,
    incubation_period,
    validate_report,
)
from .classify import (
    EvalReport,
    LinearTextModel,
    Rule,
    RuleSet,
    TrainConfig,
    classify_case,
    default_rules,
    evaluate,
    train_linear,
)
from .baselines import CollinearityError, LinearModel, fit_baseline
from .boosting import GbrConfig, GbrModel, fit_gbr, get_loss
from .dataset import Dataset
from .dynamics import (
    DEFAULT_ANCHOR,
    DailySeries,
    DelayStats,
    GeoRegressionDataset,
    SpatialTable,
    WeeklySnapshot,
    admission_delay_stats,
    build_geo_dataset,
    daily_series,
    haversine_km,
    local_transmission_share,
    peak_date,
    spatial_table,
    weekly_snapshots,
)
from .ingest import (
    ChainSet,
    ParseSummary,
    TrajectoryDatabase,
    build_chains,
    parse_corpus,
    serialize_corpus,
    transmissions_initiated,
)
from .metrics import ComparisonRow, MetricsTriple, SplitConfig, compare_models, metrics
from .synth import GroundTruthLedger, ScenarioConfig, generate, golden_scenario
from .taxonomy import CATEGORIES, LEAVES, Category, SubCategory, children_of, parent_of
from .tree import RegressionTree

__version__ = "0.1.0"
