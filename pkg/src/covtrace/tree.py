"""Axis-aligned regression tree grown by greedy variance reduction.

The tree is stored as a flat node list so it serializes directly. Split
search is exact: every boundary between distinct sorted feature values is
scored by the summed squared error of the two children, computed with
prefix sums. Ties resolve to the lowest feature index, then the lowest
threshold, which keeps fits bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_LEAF = -1
# Splitting stops once a node's squared error is below this; guards against
# chasing float dust on constant targets.
_MIN_SSE = 1e-12


@dataclass
class TreeNode:
    feature: int = _LEAF
    threshold: float = 0.0
    left: int = _LEAF
    right: int = _LEAF
    value: float = 0.0

    def is_leaf(self) -> bool:
        return self.feature == _LEAF


def _node_sse(y: np.ndarray) -> float:
    return float(((y - y.mean()) ** 2).sum())


def _best_split(x: np.ndarray, y: np.ndarray, min_samples_leaf: int):
    """Return (sse, feature, threshold) for the best split, or None."""
    n, d = x.shape
    best: tuple[float, int, float] | None = None
    for j in range(d):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ys = y[order]
        if xs[0] == xs[-1]:
            continue
        c1 = np.cumsum(ys)
        c2 = np.cumsum(ys * ys)
        left_n = np.arange(1, n)
        valid = xs[1:] != xs[:-1]
        valid &= left_n >= min_samples_leaf
        valid &= (n - left_n) >= min_samples_leaf
        if not valid.any():
            continue
        left_sum = c1[:-1]
        left_sq = c2[:-1]
        sse = (
            left_sq
            - left_sum**2 / left_n
            + (c2[-1] - left_sq)
            - (c1[-1] - left_sum) ** 2 / (n - left_n)
        )
        sse = np.where(valid, sse, np.inf)
        at = int(np.argmin(sse))  # first occurrence: lowest threshold wins ties
        if best is None or sse[at] < best[0]:
            best = (float(sse[at]), j, float((xs[at] + xs[at + 1]) / 2.0))
    return best


@dataclass
class RegressionTree:
    """A depth-limited regression tree fit to a numeric target."""

    max_depth: int = 3
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    nodes: list[TreeNode] = field(default_factory=list)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "RegressionTree":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1: {self.max_depth}")
        if len(y) == 0:
            raise ValueError("cannot fit a tree on zero samples")
        self.nodes = []
        self._grow(x, y, depth=0)
        return self

    def _grow(self, x: np.ndarray, y: np.ndarray, depth: int) -> int:
        index = len(self.nodes)
        node = TreeNode(value=float(y.mean()))
        self.nodes.append(node)
        if (
            depth >= self.max_depth
            or len(y) < self.min_samples_split
            or _node_sse(y) <= _MIN_SSE
        ):
            return index
        split = _best_split(x, y, self.min_samples_leaf)
        if split is None:
            return index
        _, feature, threshold = split
        mask = x[:, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = self._grow(x[mask], y[mask], depth + 1)
        node.right = self._grow(x[~mask], y[~mask], depth + 1)
        return index

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf node index for every row."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(len(x), dtype=int)
        for row in range(len(x)):
            at = 0
            while not self.nodes[at].is_leaf():
                node = self.nodes[at]
                at = node.left if x[row, node.feature] <= node.threshold else node.right
            out[row] = at
        return out

    def predict(self, x: np.ndarray) -> np.ndarray:
        values = np.array([node.value for node in self.nodes])
        return values[self.apply(x)]

    def set_leaf_values(self, values: dict[int, float]) -> None:
        """Overwrite leaf predictions, e.g. with per-leaf median steps."""
        for index, value in values.items():
            if not self.nodes[index].is_leaf():
                raise ValueError(f"node {index} is not a leaf")
            self.nodes[index].value = float(value)

    def to_nodes(self) -> list[list[float]]:
        return [[n.feature, n.threshold, n.left, n.right, n.value] for n in self.nodes]

    @classmethod
    def from_nodes(cls, rows: list[list[float]], max_depth: int = 3) -> "RegressionTree":
        tree = cls(max_depth=max_depth)
        tree.nodes = [
            TreeNode(
                feature=int(r[0]),
                threshold=float(r[1]),
                left=int(r[2]),
                right=int(r[3]),
                value=float(r[4]),
            )
            for r in rows
        ]
        return tree
