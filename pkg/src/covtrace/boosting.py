"""Stage-wise gradient boosting over regression-tree base learners.

The fit starts from the constant that minimizes the loss (mean for squared
error, median for absolute error), then repeatedly fits a tree to the
negative gradient of the loss at the current prediction and takes a
line-searched step along it, damped by the shrinkage factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .dataset import Dataset
from .tree import RegressionTree

MODEL_FORMAT = "covtrace-gbr-v1"


@dataclass(frozen=True)
class LossFunction:
    """A pointwise loss with its negative gradient and best constant fit."""

    name: str
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    negative_gradient: Callable[[np.ndarray, np.ndarray], np.ndarray]
    baseline: Callable[[np.ndarray], float]


# Squared error carries the conventional 1/2 so its negative gradient is
# exactly the residual y - f.
SQUARED = LossFunction(
    name="squared",
    value=lambda y, f: 0.5 * (y - f) ** 2,
    negative_gradient=lambda y, f: y - f,
    baseline=lambda y: float(np.mean(y)),
)

ABSOLUTE = LossFunction(
    name="absolute",
    value=lambda y, f: np.abs(y - f),
    negative_gradient=lambda y, f: np.sign(y - f),
    baseline=lambda y: float(np.median(y)),
)

_LOSSES = {loss.name: loss for loss in (SQUARED, ABSOLUTE)}


def get_loss(name: str) -> LossFunction:
    try:
        return _LOSSES[name]
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; expected one of {sorted(_LOSSES)}") from None


@dataclass(frozen=True)
class GbrConfig:
    stages: int = 100
    max_depth: int = 3
    shrinkage: float = 0.1
    loss: str = "squared"
    seed: int = 0  # reserved; the fit itself is deterministic

    def __post_init__(self) -> None:
        if self.stages < 1:
            raise ValueError(f"stages must be >= 1: {self.stages}")
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1: {self.max_depth}")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError(f"shrinkage must lie in (0, 1]: {self.shrinkage}")
        get_loss(self.loss)


@dataclass
class GbrStage:
    tree: RegressionTree
    multiplier: float


@dataclass
class GbrModel:
    """A fitted boosting ensemble: constant baseline plus scaled stages."""

    baseline: float
    stages: list[GbrStage]
    shrinkage: float
    loss_name: str
    feature_count: int
    train_losses: list[float] = field(default_factory=list)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.feature_count:
            raise ValueError(
                f"expected (n, {self.feature_count}) feature matrix, got shape {x.shape}"
            )
        out = np.full(len(x), self.baseline)
        for stage in self.stages:
            out += self.shrinkage * stage.multiplier * stage.tree.predict(x)
        return out

    def save(self, path: str | Path) -> None:
        payload = {
            "format": MODEL_FORMAT,
            "baseline": self.baseline,
            "shrinkage": self.shrinkage,
            "loss": self.loss_name,
            "feature_count": self.feature_count,
            "train_losses": self.train_losses,
            "stages": [
                {"multiplier": stage.multiplier, "nodes": stage.tree.to_nodes()}
                for stage in self.stages
            ],
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "GbrModel":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != MODEL_FORMAT:
            raise ValueError(f"unsupported model format: {payload.get('format')!r}")
        return cls(
            baseline=float(payload["baseline"]),
            stages=[
                GbrStage(
                    tree=RegressionTree.from_nodes(stage["nodes"]),
                    multiplier=float(stage["multiplier"]),
                )
                for stage in payload["stages"]
            ],
            shrinkage=float(payload["shrinkage"]),
            loss_name=payload["loss"],
            feature_count=int(payload["feature_count"]),
            train_losses=[float(v) for v in payload["train_losses"]],
        )


def _line_search_squared(h: np.ndarray, residual: np.ndarray) -> float:
    denom = float(h @ h)
    if denom == 0.0:
        return 0.0  # degenerate zero tree contributes nothing
    return float(h @ residual) / denom


def fit_gbr(data: Dataset, config: GbrConfig = GbrConfig()) -> GbrModel:
    """Fit a gradient-boosted tree ensemble.

    For squared error the stage multiplier is the exact scalar minimizer
    along the fitted tree's direction; for absolute error each leaf takes a
    median step over the targets it covers, which plays the same role per
    region. ``train_losses`` records the mean training loss before boosting
    and after every stage; for squared error with shrinkage at most 1 this
    sequence can never increase, and the fit asserts as much.
    """
    loss = get_loss(config.loss)
    x, y = data.x, data.y
    baseline = loss.baseline(y)
    current = np.full(len(y), baseline)
    train_losses = [float(loss.value(y, current).mean())]
    stages: list[GbrStage] = []
    for _ in range(config.stages):
        gradient = loss.negative_gradient(y, current)
        tree = RegressionTree(max_depth=config.max_depth).fit(x, gradient)
        if loss.name == "absolute":
            leaf_of = tree.apply(x)
            residual = y - current
            tree.set_leaf_values(
                {leaf: float(np.median(residual[leaf_of == leaf])) for leaf in np.unique(leaf_of)}
            )
            multiplier = 1.0
        else:
            multiplier = _line_search_squared(tree.predict(x), y - current)
        current = current + config.shrinkage * multiplier * tree.predict(x)
        stage_loss = float(loss.value(y, current).mean())
        if loss.name == "squared" and config.shrinkage <= 1.0:
            if stage_loss > train_losses[-1] + 1e-9:
                raise RuntimeError(
                    f"training loss rose from {train_losses[-1]} to {stage_loss}"
                )
        train_losses.append(stage_loss)
        stages.append(GbrStage(tree=tree, multiplier=multiplier))
    return GbrModel(
        baseline=baseline,
        stages=stages,
        shrinkage=config.shrinkage,
        loss_name=loss.name,
        feature_count=x.shape[1],
        train_losses=train_losses,
    )
