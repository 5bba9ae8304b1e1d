"""Linear regression baselines fit from scratch.

Ordinary least squares and ridge use closed-form normal equations; lasso
and elastic net use cyclic coordinate descent. All four share one
objective convention with an unpenalized intercept:

    (1 / 2n) * sum((y - Xw - b)^2)
        + lam * (alpha * ||w||_1 + (1 - alpha) / 2 * ||w||_2^2)

so ridge is alpha = 0 and lasso is alpha = 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

BASELINE_KINDS = ("ols", "ridge", "lasso", "elasticnet")

_CD_TOLERANCE = 1e-8
_CD_MAX_SWEEPS = 10_000


class CollinearityError(ValueError):
    """OLS normal matrix is singular; carries the offending column names."""

    def __init__(self, columns: list[str]):
        self.columns = columns
        super().__init__(f"singular normal matrix; collinear columns: {', '.join(columns)}")


@dataclass
class LinearModel:
    kind: str
    coefficients: np.ndarray
    intercept: float
    sweeps: int = 0  # coordinate-descent sweeps used (0 for closed forms)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != len(self.coefficients):
            raise ValueError(
                f"expected (n, {len(self.coefficients)}) feature matrix, got shape {x.shape}"
            )
        return x @ self.coefficients + self.intercept


def _collinear_columns(x: np.ndarray, names: tuple[str, ...]) -> list[str]:
    augmented = np.column_stack([np.ones(len(x)), x])
    full_rank = np.linalg.matrix_rank(augmented)
    involved = []
    for j in range(x.shape[1]):
        reduced = np.delete(augmented, j + 1, axis=1)
        if np.linalg.matrix_rank(reduced) == full_rank:
            involved.append(names[j])
    return involved or list(names)


def _fit_ols(data: Dataset) -> LinearModel:
    augmented = np.column_stack([np.ones(len(data)), data.x])
    gram = augmented.T @ augmented
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise CollinearityError(_collinear_columns(data.x, data.feature_names))
    solution = np.linalg.solve(gram, augmented.T @ data.y)
    return LinearModel(kind="ols", coefficients=solution[1:], intercept=float(solution[0]))


def _fit_ridge(data: Dataset, lam: float) -> LinearModel:
    x_mean = data.x.mean(axis=0)
    y_mean = float(data.y.mean())
    xc = data.x - x_mean
    yc = data.y - y_mean
    n, d = xc.shape
    gram = xc.T @ xc / n + lam * np.eye(d)
    w = np.linalg.solve(gram, xc.T @ yc / n)
    return LinearModel(kind="ridge", coefficients=w, intercept=y_mean - float(x_mean @ w))


def _soft_threshold(value: float, amount: float) -> float:
    if value > amount:
        return value - amount
    if value < -amount:
        return value + amount
    return 0.0


def _kkt_violation(xc, yc, w, lam, alpha, n) -> float:
    # Stationarity residual of the subgradient, coordinate-wise.
    grad = -(xc.T @ (yc - xc @ w)) / n + lam * (1 - alpha) * w
    worst = 0.0
    for j in range(len(w)):
        if w[j] != 0.0:
            worst = max(worst, abs(grad[j] + lam * alpha * np.sign(w[j])))
        else:
            worst = max(worst, max(0.0, abs(grad[j]) - lam * alpha))
    return worst


def _fit_coordinate_descent(data: Dataset, kind: str, lam: float, alpha: float) -> LinearModel:
    x_mean = data.x.mean(axis=0)
    y_mean = float(data.y.mean())
    xc = data.x - x_mean
    yc = data.y - y_mean
    n, d = xc.shape
    col_scale = (xc * xc).sum(axis=0) / n
    w = np.zeros(d)
    residual = yc.copy()
    sweeps = 0
    for sweep in range(1, _CD_MAX_SWEEPS + 1):
        sweeps = sweep
        for j in range(d):
            if col_scale[j] == 0.0:
                continue  # constant column: centered to zero, coefficient stays 0
            rho = (xc[:, j] @ residual) / n + col_scale[j] * w[j]
            new = _soft_threshold(rho, lam * alpha) / (col_scale[j] + lam * (1 - alpha))
            if new != w[j]:
                residual -= (new - w[j]) * xc[:, j]
                w[j] = new
        if _kkt_violation(xc, yc, w, lam, alpha, n) <= _CD_TOLERANCE:
            break
    return LinearModel(
        kind=kind,
        coefficients=w,
        intercept=y_mean - float(x_mean @ w),
        sweeps=sweeps,
    )


def fit_baseline(
    data: Dataset,
    kind: str,
    *,
    lam: float = 1.0,
    alpha: float = 0.5,
) -> LinearModel:
    """Fit one linear baseline.

    Args:
        data: the regression dataset.
        kind: one of "ols", "ridge", "lasso", "elasticnet".
        lam: penalty strength for the regularized kinds (must be > 0 there).
        alpha: L1 mixing weight for "elasticnet", in [0, 1].

    Raises:
        CollinearityError: for "ols" on a singular normal matrix; the
            regularized kinds never raise it since their problems stay
            strictly convex in the penalized directions.
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}")
    if kind == "ols":
        return _fit_ols(data)
    if lam <= 0:
        raise ValueError(f"{kind} requires a positive penalty, got lam={lam}")
    if kind == "ridge":
        return _fit_ridge(data, lam)
    if kind == "lasso":
        return _fit_coordinate_descent(data, "lasso", lam, alpha=1.0)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1]: {alpha}")
    return _fit_coordinate_descent(data, "elasticnet", lam, alpha)
