from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covtrace.boosting import GbrConfig
from covtrace.dataset import Dataset
from covtrace.metrics import (
    DEFAULT_MODELS,
    SplitConfig,
    compare_models,
    metrics,
    split_dataset,
)


def two_pass_oracle(y_true, y_pred):
    """Plain-loop restatement of all three metrics."""
    n = len(y_true)
    residuals = [t - p for t, p in zip(y_true, y_pred)]
    mse = sum(r * r for r in residuals) / n
    mae = sum(abs(r) for r in residuals) / n
    mean_y = sum(y_true) / n
    var_y = sum((t - mean_y) ** 2 for t in y_true) / n
    mean_r = sum(residuals) / n
    var_r = sum((r - mean_r) ** 2 for r in residuals) / n
    ev = None if var_y == 0 else 1.0 - var_r / var_y
    return ev, mae, mse


class TestMetrics:
    def test_perfect_predictions(self):
        y = np.array([1.0, 2.0, 3.0])
        triple = metrics(y, y)
        assert triple.explained_variance == 1.0
        assert triple.mae == 0.0
        assert triple.mse == 0.0

    def test_hand_checked_example(self):
        # residuals (-1, -2): mse 2.5, mae 1.5; var(resid) == var(y) == 0.25
        # so no variance is explained.
        triple = metrics(np.array([1.0, 2.0]), np.array([2.0, 4.0]))
        assert triple.mse == 2.5
        assert triple.mae == 1.5
        assert triple.explained_variance == 0.0

    def test_matches_two_pass_oracle(self):
        rng = np.random.default_rng(0)
        y_true = rng.normal(size=100)
        y_pred = y_true + rng.normal(scale=0.3, size=100)
        triple = metrics(y_true, y_pred)
        ev, mae, mse = two_pass_oracle(y_true.tolist(), y_pred.tolist())
        assert triple.mse == pytest.approx(mse, rel=1e-12)
        assert triple.mae == pytest.approx(mae, rel=1e-12)
        assert triple.explained_variance == pytest.approx(ev, rel=1e-12)

    def test_constant_target_perfectly_predicted(self):
        y = np.full(5, 3.0)
        assert metrics(y, y).explained_variance == 1.0

    def test_constant_target_mispredicted_is_undefined(self):
        y = np.full(5, 3.0)
        triple = metrics(y, y + 1.0)
        assert triple.explained_variance is None
        assert triple.mse == 1.0

    def test_constant_bias_still_explains_variance(self):
        # A constant offset leaves residual variance at zero.
        y = np.array([1.0, 2.0, 3.0, 4.0])
        triple = metrics(y, y + 10.0)
        assert triple.explained_variance == 1.0
        assert triple.mae == 10.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            metrics(np.zeros(3), np.zeros(4))

    def test_2d_input_rejected(self):
        with pytest.raises(ValueError):
            metrics(np.zeros((3, 1)), np.zeros((3, 1)))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            metrics(np.array([]), np.array([]))

    @given(
        data=st.lists(
            st.tuples(
                st.floats(-100, 100, allow_nan=False),
                st.floats(-100, 100, allow_nan=False),
            ),
            min_size=2,
            max_size=30,
        )
    )
    @settings(max_examples=80, deadline=None)
    def test_basic_bounds_hold(self, data):
        y_true = np.array([t for t, _ in data])
        y_pred = np.array([p for _, p in data])
        triple = metrics(y_true, y_pred)
        assert triple.mse >= 0.0
        assert triple.mae >= 0.0
        assert triple.mae**2 <= triple.mse + 1e-9  # Jensen
        if triple.explained_variance is not None:
            assert triple.explained_variance <= 1.0


class TestSplit:
    def test_partition_covers_everything_once(self):
        data = Dataset(x=np.arange(20, dtype=float).reshape(-1, 1), y=np.arange(20, dtype=float))
        train, test = split_dataset(data, SplitConfig(seed=1))
        assert len(train) + len(test) == 20
        combined = sorted(np.concatenate([train.y, test.y]).tolist())
        assert combined == list(range(20))

    def test_default_fraction_is_quarter(self):
        data = Dataset(x=np.arange(20, dtype=float).reshape(-1, 1), y=np.arange(20, dtype=float))
        _, test = split_dataset(data, SplitConfig())
        assert len(test) == 5

    def test_same_seed_same_split(self):
        data = Dataset(x=np.arange(16, dtype=float).reshape(-1, 1), y=np.arange(16, dtype=float))
        _, test_a = split_dataset(data, SplitConfig(seed=7))
        _, test_b = split_dataset(data, SplitConfig(seed=7))
        assert np.array_equal(test_a.y, test_b.y)

    def test_different_seed_usually_differs(self):
        data = Dataset(x=np.arange(16, dtype=float).reshape(-1, 1), y=np.arange(16, dtype=float))
        _, test_a = split_dataset(data, SplitConfig(seed=1))
        _, test_b = split_dataset(data, SplitConfig(seed=2))
        assert not np.array_equal(test_a.y, test_b.y)

    def test_tiny_dataset_keeps_one_for_training(self):
        data = Dataset(x=np.arange(2, dtype=float).reshape(-1, 1), y=np.arange(2, dtype=float))
        train, test = split_dataset(data, SplitConfig(test_fraction=0.9))
        assert len(train) == 1
        assert len(test) == 1

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2])
    def test_invalid_fraction_rejected(self, fraction):
        with pytest.raises(ValueError):
            SplitConfig(test_fraction=fraction)


class TestCompareModels:
    def linear_data(self, n=60, seed=0):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-2, 2, size=(n, 2))
        y = 2.0 * x[:, 0] - 1.0 * x[:, 1] + 0.5 + rng.normal(scale=0.05, size=n)
        return Dataset(x=x, y=y)

    def step_data(self, n=80, seed=0):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0, 1, size=(n, 2))
        y = np.where(x[:, 0] > 0.5, 8.0, 0.0) + np.where(x[:, 1] > 0.3, 4.0, 0.0)
        return Dataset(x=x, y=y + rng.normal(scale=0.05, size=n))

    def test_row_order_follows_models_argument(self):
        rows = compare_models(self.linear_data(), models=("ridge", "gbr"))
        assert [row.model for row in rows] == ["ridge", "gbr"]

    def test_default_runs_all_five(self):
        rows = compare_models(self.linear_data())
        assert [row.model for row in rows] == list(DEFAULT_MODELS)

    def test_ols_nails_linear_data(self):
        rows = compare_models(self.linear_data(), models=("ols",))
        assert rows[0].held_out.explained_variance > 0.99

    def test_gbr_beats_linear_models_on_step_data(self):
        rows = compare_models(
            self.step_data(),
            SplitConfig(seed=3),
            gbr=GbrConfig(stages=80, max_depth=2, shrinkage=0.3),
        )
        by_model = {row.model: row.held_out.mse for row in rows}
        for linear in ("ols", "ridge", "lasso", "elasticnet"):
            assert by_model["gbr"] < by_model[linear]

    def test_same_split_for_every_model(self):
        # OLS run alone and together with others must see identical data.
        alone = compare_models(self.linear_data(), SplitConfig(seed=5), models=("ols",))
        together = compare_models(self.linear_data(), SplitConfig(seed=5))
        ols_row = next(r for r in together if r.model == "ols")
        assert alone[0].held_out == ols_row.held_out

    def test_comparison_is_deterministic(self):
        a = compare_models(self.step_data(), SplitConfig(seed=11))
        b = compare_models(self.step_data(), SplitConfig(seed=11))
        assert a == b

    def test_too_few_samples_rejected(self):
        data = Dataset(x=np.arange(3, dtype=float).reshape(-1, 1), y=np.arange(3, dtype=float))
        with pytest.raises(ValueError, match="at least 4"):
            compare_models(data)

    def test_unknown_model_rejected(self):
        with pytest.raises(ValueError, match="unknown model"):
            compare_models(self.linear_data(), models=("gbr", "svm"))
