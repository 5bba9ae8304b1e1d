"""Regression metrics and the model-comparison harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .baselines import BASELINE_KINDS, fit_baseline
from .boosting import GbrConfig, fit_gbr
from .dataset import Dataset

DEFAULT_MODELS = ("gbr",) + BASELINE_KINDS


@dataclass(frozen=True)
class MetricsTriple:
    """Explained variance, mean absolute error and mean squared error.

    ``explained_variance`` is None when the target has zero variance and
    the residuals are not identically zero, in which case the quantity is
    undefined.
    """

    explained_variance: float | None
    mae: float
    mse: float


def metrics(y_true: np.ndarray, y_pred: np.ndarray) -> MetricsTriple:
    """Compute the metric triple for one prediction vector."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError(
            f"prediction shape {y_pred.shape} does not match target shape {y_true.shape}"
        )
    if len(y_true) == 0:
        raise ValueError("cannot score zero predictions")
    residual = y_true - y_pred
    mse = float(np.mean(residual**2))
    mae = float(np.mean(np.abs(residual)))
    target_var = float(np.var(y_true))
    if target_var == 0.0:
        explained = 1.0 if np.all(residual == 0.0) else None
    else:
        explained = 1.0 - float(np.var(residual)) / target_var
    return MetricsTriple(explained_variance=explained, mae=mae, mse=mse)


@dataclass(frozen=True)
class SplitConfig:
    seed: int = 0
    test_fraction: float = 0.25

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1): {self.test_fraction}")


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    held_out: MetricsTriple


def split_dataset(data: Dataset, split: SplitConfig) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled train/test split."""
    n = len(data)
    order = np.random.default_rng(split.seed).permutation(n)
    test_size = max(1, int(round(n * split.test_fraction)))
    if test_size >= n:
        test_size = n - 1
    return data.subset(order[test_size:]), data.subset(order[:test_size])


def compare_models(
    data: Dataset,
    split: SplitConfig = SplitConfig(),
    *,
    gbr: GbrConfig = GbrConfig(),
    models: Sequence[str] = DEFAULT_MODELS,
    ridge_lam: float = 1.0,
    lasso_lam: float = 0.1,
    elasticnet_lam: float = 0.1,
    elasticnet_alpha: float = 0.5,
) -> list[ComparisonRow]:
    """Fit the requested models on one split and score them held-out.

    All models see the same train/test partition, so rows are directly
    comparable. Row order follows the ``models`` argument.
    """
    if len(data) < 4:
        raise ValueError(f"need at least 4 samples to compare models, got {len(data)}")
    for name in models:
        if name not in DEFAULT_MODELS:
            raise ValueError(f"unknown model {name!r}; expected a subset of {DEFAULT_MODELS}")
    train, test = split_dataset(data, split)
    rows: list[ComparisonRow] = []
    for name in models:
        if name == "gbr":
            predictions = fit_gbr(train, gbr).predict(test.x)
        elif name == "ols":
            predictions = fit_baseline(train, "ols").predict(test.x)
        elif name == "ridge":
            predictions = fit_baseline(train, "ridge", lam=ridge_lam).predict(test.x)
        elif name == "lasso":
            predictions = fit_baseline(train, "lasso", lam=lasso_lam).predict(test.x)
        else:
            predictions = fit_baseline(
                train, "elasticnet", lam=elasticnet_lam, alpha=elasticnet_alpha
            ).predict(test.x)
        rows.append(ComparisonRow(model=name, held_out=metrics(test.y, predictions)))
    return rows
