"""Tabular regression dataset container shared by all model code."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Dataset:
    """A feature matrix with aligned targets and feature names."""

    x: np.ndarray  # (n, d)
    y: np.ndarray  # (n,)
    feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2:
            raise ValueError(f"x must be 2-dimensional, got shape {self.x.shape}")
        if self.y.ndim != 1:
            raise ValueError(f"y must be 1-dimensional, got shape {self.y.shape}")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"x has {self.x.shape[0]} rows but y has {self.y.shape[0]} entries"
            )
        if self.x.shape[0] == 0:
            raise ValueError("dataset is empty")
        if not np.isfinite(self.x).all() or not np.isfinite(self.y).all():
            raise ValueError("dataset contains non-finite values")
        if not self.feature_names:
            self.feature_names = tuple(f"x{j}" for j in range(self.x.shape[1]))
        if len(self.feature_names) != self.x.shape[1]:
            raise ValueError(
                f"{len(self.feature_names)} feature names for {self.x.shape[1]} columns"
            )

    def __len__(self) -> int:
        return self.x.shape[0]

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.x[indices], self.y[indices], self.feature_names)
