"""Infection-source classification.

Two interchangeable scorers produce per-leaf scores for a report:

* RuleSet: weighted keyword/phrase rules over the normalized narrative plus
  structured evidence tokens (travel history, contact relationships and
  contact location kinds).
* LinearTextModel: a bag-of-tokens linear softmax model trained by plain
  full-batch gradient descent.

``classify_case`` turns either scorer's output into an InfectionLabel.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .cases import CaseReport, InfectionLabel, Relationship, TravelHistory
from .taxonomy import LEAF_INDEX, LEAF_PRIORITY, LEAVES, Category, SubCategory, parent_of

# Reports whose winning normalized score falls below this mass are treated
# as unexplained.
SCORE_THRESHOLD = 0.2

_TOKEN = re.compile(r"[a-z0-9_=]+")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split into tokens."""
    return _TOKEN.findall(text.lower())


def evidence_tokens(report: CaseReport) -> list[str]:
    """Narrative tokens plus synthetic tokens for structured evidence."""
    tokens = tokenize(report.narrative)
    if report.travel_history is not TravelHistory.UNKNOWN:
        tokens.append(f"travel_history={report.travel_history.value}")
    for contact in report.contacts:
        if contact.relationship is not Relationship.UNKNOWN:
            tokens.append(f"contact_relationship={contact.relationship.value}")
        if contact.location_kind is not None:
            tokens.append(f"contact_location={contact.location_kind.value}")
    return tokens


@dataclass(frozen=True)
class Rule:
    """One weighted phrase rule voting for a single leaf."""

    pattern: str
    leaf: SubCategory
    weight: float

    def __post_init__(self) -> None:
        if self.weight <= 0:
            raise ValueError(f"rule weight must be positive: {self.weight}")
        if not tokenize(self.pattern):
            raise ValueError(f"rule pattern has no tokens: {self.pattern!r}")


@dataclass(frozen=True)
class RuleSet:
    """An ordered collection of rules; scores are sums of matched weights.

    A rule matches when its normalized token sequence occurs contiguously
    in the report's evidence tokens; each rule contributes its weight at
    most once.
    """

    rules: tuple[Rule, ...]

    def leaf_scores(self, report: CaseReport) -> np.ndarray:
        tokens = evidence_tokens(report)
        haystack = " " + " ".join(tokens) + " "
        scores = np.zeros(len(LEAVES))
        for rule in self.rules:
            needle = " " + " ".join(tokenize(rule.pattern)) + " "
            if needle in haystack:
                scores[LEAF_INDEX[rule.leaf]] += rule.weight
        return scores

    def normalize(self, scores: np.ndarray) -> np.ndarray:
        total = scores.sum()
        if total <= 0:
            return np.zeros_like(scores)
        return scores / total

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
            for rule in self.rules:
                handle.write(
                    json.dumps(
                        {"pattern": rule.pattern, "leaf": rule.leaf.value, "weight": rule.weight}
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path: str | Path) -> "RuleSet":
        rules = []
        with Path(path).open(encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                obj = json.loads(line)
                rules.append(
                    Rule(
                        pattern=obj["pattern"],
                        leaf=SubCategory(obj["leaf"]),
                        weight=float(obj["weight"]),
                    )
                )
        return cls(rules=tuple(rules))


# Narrative phrases per leaf. Kept to distinctive wordings so no phrase is
# a sub-phrase of another leaf's phrase.
_NARRATIVE_PATTERNS: tuple[tuple[str, SubCategory], ...] = (
    ("dined at a restaurant", SubCategory.RESTAURANT),
    ("shared a restaurant meal with a confirmed case", SubCategory.RESTAURANT),
    ("shopped at the supermarket", SubCategory.SUPERMARKET),
    ("queued at the supermarket alongside a confirmed case", SubCategory.SUPERMARKET),
    ("visited the hospital ward", SubCategory.HOSPITAL),
    ("accompanied a patient at the hospital", SubCategory.HOSPITAL),
    ("stayed at the hotel", SubCategory.HOTEL),
    ("attended a hotel banquet with a confirmed case", SubCategory.HOTEL),
    ("browsed the shopping mall", SubCategory.SHOPPING_MALL),
    ("shopping mall outing with a confirmed case", SubCategory.SHOPPING_MALL),
    ("same residential compound as a confirmed case", SubCategory.RESIDENTIAL),
    ("neighbour in the residential block", SubCategory.RESIDENTIAL),
    ("resident of the nursing home", SubCategory.NURSING_HOME),
    ("nursing home ward shared with a confirmed case", SubCategory.NURSING_HOME),
    ("shared a private car", SubCategory.PRIVATE_VEHICLE),
    ("carpooled with a confirmed case", SubCategory.PRIVATE_VEHICLE),
    ("took the train", SubCategory.TRAIN),
    ("train carriage next to a confirmed case", SubCategory.TRAIN),
    ("passed through the airport", SubCategory.AIRPORT),
    ("flight seated near a confirmed case", SubCategory.AIRPORT),
    ("rode the bus", SubCategory.BUS),
    ("bus ride next to a confirmed case", SubCategory.BUS),
    ("infected family member at home", SubCategory.RELATIVE),
    ("lives with a confirmed relative", SubCategory.RELATIVE),
    ("recently returned from wuhan", SubCategory.HUBEI),
    ("travelled back from hubei", SubCategory.HUBEI),
)

_CONTACT_LOCATION_LEAVES: tuple[SubCategory, ...] = (
    SubCategory.RESTAURANT,
    SubCategory.SUPERMARKET,
    SubCategory.HOSPITAL,
    SubCategory.HOTEL,
    SubCategory.SHOPPING_MALL,
    SubCategory.RESIDENTIAL,
    SubCategory.NURSING_HOME,
    SubCategory.PRIVATE_VEHICLE,
    SubCategory.TRAIN,
    SubCategory.AIRPORT,
    SubCategory.BUS,
)


def default_rules() -> RuleSet:
    """The built-in rule table.

    A recorded Hubei travel history must always win, so the travel rules
    carry more weight than everything else combined: no narrative, however
    adversarial, can out-vote them.
    """
    rules = [Rule(pattern, leaf, 1.0) for pattern, leaf in _NARRATIVE_PATTERNS]
    rules.append(Rule("contact_relationship=relative", SubCategory.RELATIVE, 1.0))
    for leaf in _CONTACT_LOCATION_LEAVES:
        rules.append(Rule(f"contact_location={leaf.value}", leaf, 1.0))
    dominant = sum(rule.weight for rule in rules) + 1.0
    rules.append(Rule("travel_history=wuhan", SubCategory.HUBEI, dominant))
    rules.append(Rule("travel_history=hubei_other", SubCategory.HUBEI, dominant))
    return RuleSet(rules=tuple(rules))


def _pick_leaf(scores: np.ndarray) -> SubCategory:
    best = scores.max()
    for leaf in LEAF_PRIORITY:
        if scores[LEAF_INDEX[leaf]] == best:
            return leaf
    raise AssertionError("unreachable: max not found among leaves")


def classify_case(
    report: CaseReport,
    scorer: "RuleSet | LinearTextModel | None" = None,
    *,
    threshold: float = SCORE_THRESHOLD,
) -> InfectionLabel:
    """Label one report with its most plausible infection source.

    The winning leaf is the argmax of the scorer's normalized scores, with
    exact ties resolved by the fixed taxonomy priority order. A report with
    no evidence at all, or whose winning score mass stays below
    ``threshold``, is labelled (unknown, unknown).
    """
    if scorer is None:
        scorer = default_rules()
    if not evidence_tokens(report):
        return InfectionLabel(Category.UNKNOWN, SubCategory.UNKNOWN, 0.0)
    normalized = scorer.normalize(scorer.leaf_scores(report))
    if normalized.sum() <= 0:
        return InfectionLabel(Category.UNKNOWN, SubCategory.UNKNOWN, 0.0)
    leaf = _pick_leaf(normalized)
    score = float(normalized[LEAF_INDEX[leaf]])
    if score < threshold:
        return InfectionLabel(Category.UNKNOWN, SubCategory.UNKNOWN, score)
    return InfectionLabel(parent_of(leaf), leaf, score)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 300
    seed: int = 0


@dataclass
class LinearTextModel:
    """Bag-of-tokens linear softmax classifier over the fourteen leaves."""

    vocabulary: dict[str, int]
    weights: np.ndarray  # (vocab, leaves)
    bias: np.ndarray  # (leaves,)
    config: TrainConfig
    loss_history: list[float] = field(default_factory=list)

    def _features(self, report: CaseReport) -> np.ndarray:
        x = np.zeros(len(self.vocabulary))
        for token in evidence_tokens(report):
            idx = self.vocabulary.get(token)
            if idx is not None:
                x[idx] += 1.0
        return x

    def leaf_scores(self, report: CaseReport) -> np.ndarray:
        return self._features(report) @ self.weights + self.bias

    def normalize(self, scores: np.ndarray) -> np.ndarray:
        shifted = scores - scores.max()
        exp = np.exp(shifted)
        return exp / exp.sum()

    def save(self, path: str | Path) -> None:
        tokens = [""] * len(self.vocabulary)
        for token, idx in self.vocabulary.items():
            tokens[idx] = token
        payload = {
            "format": "covtrace-linear-v1",
            "vocabulary": tokens,
            "weights": self.weights.tolist(),
            "bias": self.bias.tolist(),
            "config": {
                "learning_rate": self.config.learning_rate,
                "epochs": self.config.epochs,
                "seed": self.config.seed,
            },
            "loss_history": self.loss_history,
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearTextModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != "covtrace-linear-v1":
            raise ValueError(f"unsupported model format: {payload.get('format')!r}")
        return cls(
            vocabulary={token: i for i, token in enumerate(payload["vocabulary"])},
            weights=np.array(payload["weights"], dtype=float).reshape(
                len(payload["vocabulary"]), len(LEAVES)
            ),
            bias=np.array(payload["bias"], dtype=float),
            config=TrainConfig(**payload["config"]),
            loss_history=list(payload["loss_history"]),
        )


def train_linear(
    corpus: Sequence[tuple[CaseReport, SubCategory]],
    config: TrainConfig = TrainConfig(),
) -> LinearTextModel:
    """Fit a LinearTextModel by full-batch gradient descent.

    Training minimizes mean softmax cross-entropy, which is convex in the
    weights, so with the default step size the recorded loss history is
    non-increasing. The procedure is deterministic for a fixed config.

    Raises:
        ValueError: on an empty corpus or a label outside the taxonomy.
    """
    if not corpus:
        raise ValueError("training corpus is empty")
    labels = []
    for _, leaf in corpus:
        try:
            labels.append(LEAF_INDEX[SubCategory(leaf)])
        except (ValueError, KeyError):
            raise ValueError(f"unknown leaf label in corpus: {leaf!r}") from None

    vocabulary = {
        token: i
        for i, token in enumerate(sorted({t for report, _ in corpus for t in evidence_tokens(report)}))
    }
    n = len(corpus)
    x = np.zeros((n, len(vocabulary)))
    for row, (report, _) in enumerate(corpus):
        for token in evidence_tokens(report):
            x[row, vocabulary[token]] += 1.0
    y = np.array(labels)
    one_hot = np.zeros((n, len(LEAVES)))
    one_hot[np.arange(n), y] = 1.0

    weights = np.zeros((len(vocabulary), len(LEAVES)))
    bias = np.zeros(len(LEAVES))
    losses: list[float] = []
    for _ in range(config.epochs):
        logits = x @ weights + bias
        logits -= logits.max(axis=1, keepdims=True)
        exp = np.exp(logits)
        probs = exp / exp.sum(axis=1, keepdims=True)
        losses.append(float(-np.log(probs[np.arange(n), y]).mean()))
        grad = (probs - one_hot) / n
        weights -= config.learning_rate * (x.T @ grad)
        bias -= config.learning_rate * grad.sum(axis=0)
    return LinearTextModel(
        vocabulary=vocabulary,
        weights=weights,
        bias=bias,
        config=config,
        loss_history=losses,
    )


@dataclass
class EvalReport:
    """Accuracy, per-leaf precision/recall and the full confusion matrix."""

    accuracy: float
    precision: dict[SubCategory, float]
    recall: dict[SubCategory, float]
    confusion: np.ndarray  # rows: true leaf, cols: predicted leaf
    total: int


def evaluate(
    scorer: RuleSet | LinearTextModel,
    labeled: Iterable[tuple[CaseReport, SubCategory]],
    *,
    threshold: float = SCORE_THRESHOLD,
) -> EvalReport:
    """Score a labeled set and summarize agreement per leaf."""
    confusion = np.zeros((len(LEAVES), len(LEAVES)), dtype=int)
    total = 0
    for report, true_leaf in labeled:
        predicted = classify_case(report, scorer, threshold=threshold).subcategory
        confusion[LEAF_INDEX[SubCategory(true_leaf)], LEAF_INDEX[predicted]] += 1
        total += 1
    if total == 0:
        raise ValueError("labeled set is empty")
    correct = int(np.trace(confusion))
    precision: dict[SubCategory, float] = {}
    recall: dict[SubCategory, float] = {}
    for leaf in LEAVES:
        i = LEAF_INDEX[leaf]
        predicted_count = int(confusion[:, i].sum())
        true_count = int(confusion[i, :].sum())
        tp = int(confusion[i, i])
        precision[leaf] = tp / predicted_count if predicted_count else 0.0
        recall[leaf] = tp / true_count if true_count else 0.0
    return EvalReport(
        accuracy=correct / total,
        precision=precision,
        recall=recall,
        confusion=confusion,
        total=total,
    )
