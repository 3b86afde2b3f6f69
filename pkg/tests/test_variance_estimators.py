"""Tests for the residual, direct and homoscedastic variance estimators."""

import numpy as np
import pytest

from reluboot.models import Dataset, FittedMean, FittedVariance, NetworkArch, TrainConfig
from reluboot.tools.scenarios import get_scenario, sample_dataset
from reluboot.tools.variance_estimators import (
    estimate_variance,
    fit_mean,
    fit_sigma2_homoscedastic,
    fit_variance_direct,
    fit_variance_residual,
    predict_mean,
    predict_variance,
    residuals,
    strategy_blocks,
    variance_mse,
)
from reluboot.utils.validation import DimensionMismatchError, ValidationError


# Enough Adam steps to fit a constant target on 64 points
SMOOTH_FIT = TrainConfig(epochs=500, batch_size=16, learning_rate=5e-3, rng_seed=0)


def zero_mean(make_constant_net, d: int, bound: float = 10.0) -> FittedMean:
    return FittedMean(net=make_constant_net(d, 0.0), clip_bound=bound)


class TestMeanFit:
    """Tests for fit_mean / predict_mean."""

    def test_predictions_are_clipped(self, linear_dataset):
        """Test that mean predictions stay inside [-A, A]."""
        cfg = TrainConfig(epochs=20, batch_size=32, learning_rate=1e-2)
        mean = fit_mean(linear_dataset, NetworkArch(input_dim=1, depth=1, width=8), cfg, clip_bound=1.5)
        preds = predict_mean(mean, np.linspace(0, 1, 50).reshape(-1, 1))
        assert np.all(np.abs(preds) <= 1.5)

    def test_default_bound_is_max_abs_response(self, linear_dataset):
        """Test that the default mean bound is max |y|."""
        cfg = TrainConfig(epochs=1)
        mean = fit_mean(linear_dataset, NetworkArch(input_dim=1, depth=1, width=4), cfg)
        assert mean.clip_bound == pytest.approx(np.max(np.abs(linear_dataset.ys)))

    def test_all_zero_responses_fall_back_to_unit_bound(self):
        """Test that all-zero responses give a clip bound of 1."""
        data = Dataset(xs=np.linspace(0, 1, 10).reshape(-1, 1), ys=np.zeros(10))
        mean = fit_mean(data, NetworkArch(input_dim=1, depth=1, width=2), TrainConfig(epochs=1))
        assert mean.clip_bound == 1.0

    def test_rejects_non_positive_bound(self, linear_dataset):
        """Test that a zero mean bound is rejected."""
        with pytest.raises(ValidationError):
            fit_mean(linear_dataset, NetworkArch(input_dim=1, depth=1, width=2), TrainConfig(epochs=1), clip_bound=0.0)

    def test_dimension_mismatch(self, linear_dataset):
        """Test that an architecture of the wrong input width is rejected."""
        with pytest.raises(DimensionMismatchError):
            fit_mean(linear_dataset, NetworkArch(input_dim=3, depth=1, width=2), TrainConfig(epochs=1))


class TestHomoscedastic:
    """Closed-form sigma2 against brute-force minimization."""

    def test_unit_residuals(self, make_constant_net):
        """Test that residuals of +-1 give sigma2 = 1."""
        data = Dataset(xs=np.zeros((4, 1)), ys=np.array([1.0, -1.0, 1.0, -1.0]))
        est = fit_sigma2_homoscedastic(zero_mean(make_constant_net, 1), data)
        assert est.sigma2 == pytest.approx(1.0)

    def test_projection_onto_bound(self, make_constant_net):
        """Test that sigma2 is projected onto the clip bound."""
        data = Dataset(xs=np.zeros((4, 1)), ys=np.array([1.0, -1.0, 1.0, -1.0]))
        est = fit_sigma2_homoscedastic(zero_mean(make_constant_net, 1), data, clip_bound=0.5)
        assert est.sigma2 == 0.5

    def test_matches_grid_search(self, make_constant_net, rng):
        """Test the closed form against a grid search on random residuals."""
        mean = zero_mean(make_constant_net, 1, bound=100.0)
        for _ in range(100):
            n = int(rng.integers(5, 60))
            ys = rng.normal(0.0, rng.uniform(0.2, 2.0), size=n)
            squared = ys ** 2
            bound = float(rng.uniform(0.3, 1.5) * squared.mean())
            est = fit_sigma2_homoscedastic(mean, Dataset(xs=np.zeros((n, 1)), ys=ys), clip_bound=bound)

            grid = np.arange(0.0, bound + 1e-12, 1e-4)
            objective = np.sum(squared ** 2) - 2.0 * grid * squared.sum() + n * grid ** 2
            assert abs(est.sigma2 - grid[np.argmin(objective)]) < 1e-4


class TestResidualAndDirect:
    """Tests for the network-based estimators."""

    def test_residual_keeps_negative_predictions_clipped_at_minus_bound(self, make_constant_net):
        """Test that residual estimates are clipped to -B, not to zero."""
        est = FittedVariance(kind="residual", clip_bound=2.0, net=make_constant_net(2, -10.0))
        assert np.all(predict_variance(est, np.zeros((3, 2))) == -2.0)

    def test_direct_is_second_moment_minus_mean_squared(self, make_constant_net, rng):
        """Test that the direct estimate is clip(h) minus the mean squared."""
        for _ in range(100):
            h, f, bound = rng.uniform(0, 5), rng.uniform(-2, 2), rng.uniform(0.5, 6)
            mean = FittedMean(net=make_constant_net(2, f), clip_bound=3.0)
            est = FittedVariance(kind="direct", clip_bound=bound, net=make_constant_net(2, h), mean=mean)
            expected = min(h, bound) - f ** 2
            assert abs(predict_variance(est, np.zeros((1, 2)))[0] - expected) < 1e-12

    def test_residual_fit_uses_squared_residuals(self, linear_dataset):
        """Test that the residual bound defaults to the max squared residual."""
        cfg = TrainConfig(epochs=30, batch_size=32, learning_rate=1e-2)
        mean = fit_mean(linear_dataset, NetworkArch(input_dim=1, depth=1, width=8), cfg)
        var = fit_variance_residual(mean, linear_dataset, NetworkArch(input_dim=1, depth=1, width=4), cfg)
        assert var.kind == "residual"
        assert var.clip_bound == pytest.approx(np.max(residuals(mean, linear_dataset) ** 2))

    def test_direct_default_bound_is_max_squared_response(self, linear_dataset):
        """Test that the direct bound defaults to max y^2 and keeps the mean."""
        cfg = TrainConfig(epochs=2)
        mean = fit_mean(linear_dataset, NetworkArch(input_dim=1, depth=1, width=4), cfg)
        var = fit_variance_direct(mean, linear_dataset, NetworkArch(input_dim=1, depth=1, width=4), cfg)
        assert var.clip_bound == pytest.approx(np.max(linear_dataset.ys ** 2))
        assert var.mean is mean

    def test_residual_fit_on_constant_squared_residuals(self, make_constant_net):
        """Test that squared residuals fixed at 1.44 are learned within 0.05."""
        xs = np.linspace(0.0, 1.0, 64).reshape(-1, 1)
        data = Dataset(xs=xs, ys=np.tile([1.2, -1.2], 32))
        var = fit_variance_residual(zero_mean(make_constant_net, 1), data, NetworkArch(input_dim=1, depth=1, width=8), SMOOTH_FIT, clip_bound=10.0)
        assert np.max(np.abs(predict_variance(var, xs) - 1.44)) < 0.05

    def test_residual_fit_on_zero_residuals(self, make_constant_net):
        """Test that an exact mean fit gives a variance estimate within 0.02 of 0."""
        xs = np.linspace(0.0, 1.0, 64).reshape(-1, 1)
        mean = FittedMean(net=make_constant_net(1, 0.7), clip_bound=10.0)
        data = Dataset(xs=xs, ys=np.full(64, 0.7))
        assert np.all(residuals(mean, data) == 0.0)
        var = fit_variance_residual(mean, data, NetworkArch(input_dim=1, depth=1, width=8), SMOOTH_FIT)
        assert var.clip_bound == 1.0
        assert np.max(np.abs(predict_variance(var, xs))) < 0.02

    def test_direct_fit_on_noiseless_constant(self):
        """Test that y = 1.5 without noise gives a direct estimate within 0.1 of 0."""
        xs = np.linspace(0.0, 1.0, 64).reshape(-1, 1)
        data = Dataset(xs=xs, ys=np.full(64, 1.5))
        arch = NetworkArch(input_dim=1, depth=1, width=8)
        mean = fit_mean(data, arch, SMOOTH_FIT)
        var = fit_variance_direct(mean, data, arch, SMOOTH_FIT)
        assert var.clip_bound == pytest.approx(2.25)
        assert np.max(np.abs(predict_variance(var, xs))) < 0.1

    def test_direct_second_moment_is_clipped(self, make_constant_net):
        """Test that the second-moment network is capped at the clip bound."""
        xs = np.linspace(0.0, 1.0, 64).reshape(-1, 1)
        data = Dataset(xs=xs, ys=np.tile([1.0, -1.0], 32))
        arch = NetworkArch(input_dim=1, depth=1, width=8)
        capped = fit_variance_direct(zero_mean(make_constant_net, 1), data, arch, SMOOTH_FIT, clip_bound=0.5)
        assert np.all(predict_variance(capped, xs) == 0.5)

        bounded = fit_variance_direct(zero_mean(make_constant_net, 1), data, arch, TrainConfig(epochs=3))
        assert bounded.clip_bound == 1.0
        assert np.all(predict_variance(bounded, np.linspace(0.0, 1.0, 201).reshape(-1, 1)) <= 1.0)

    def test_kind_payload_validation(self, make_constant_net):
        """Test that each estimator kind requires its own payload."""
        with pytest.raises(ValueError):
            FittedVariance(kind="residual", clip_bound=1.0)
        with pytest.raises(ValueError):
            FittedVariance(kind="direct", clip_bound=1.0, net=make_constant_net(1, 0.0))
        with pytest.raises(ValueError):
            FittedVariance(kind="homoscedastic", clip_bound=1.0, sigma2=2.0)


class TestVarianceMse:
    """Tests for variance_mse."""

    def test_oracle_scores_zero(self):
        """Test that the true variance function scores zero."""
        spec = get_scenario(1)
        xs = np.random.default_rng(0).uniform(size=(50, 2))
        assert variance_mse(spec.g_star, xs, spec.g_star) == 0.0

    def test_matches_direct_formula(self, rng):
        """Test variance_mse against the mean squared difference."""
        for _ in range(100):
            xs = rng.uniform(size=(int(rng.integers(1, 40)), 3))
            shift = rng.normal()
            truth = xs.sum(axis=1)
            est = lambda q, s=shift: q.sum(axis=1) + s * q[:, 0]
            expected = np.mean((shift * xs[:, 0]) ** 2)
            assert abs(variance_mse(est, xs, truth) - expected) < 1e-12

    def test_shape_mismatch(self):
        """Test that truth of the wrong length is rejected."""
        with pytest.raises(DimensionMismatchError):
            variance_mse(lambda q: np.zeros(q.shape[0]), np.zeros((3, 1)), np.zeros(4))


class TestStrategies:
    """Tests for the full-data and split-half strategies."""

    def test_split_halves(self):
        """Test that the split strategy cuts at floor(n / 2)."""
        data = Dataset(xs=np.linspace(0, 1, 7).reshape(-1, 1), ys=np.arange(7.0))
        mean_block, var_block = strategy_blocks(data, "split")
        assert list(mean_block.ys) == [0.0, 1.0, 2.0]
        assert list(var_block.ys) == [3.0, 4.0, 5.0, 6.0]

    def test_full_reuses_everything(self, linear_dataset):
        """Test that the full strategy uses the whole dataset twice."""
        mean_block, var_block = strategy_blocks(linear_dataset, "full")
        assert mean_block is linear_dataset and var_block is linear_dataset

    def test_unknown_strategy(self, linear_dataset):
        """Test that an unknown strategy is rejected."""
        with pytest.raises(ValidationError):
            strategy_blocks(linear_dataset, "thirds")

    @pytest.mark.parametrize("kind", ["residual", "direct", "homoscedastic"])
    @pytest.mark.parametrize("strategy", ["full", "split"])
    def test_estimate_variance_end_to_end(self, kind, strategy, tiny_settings):
        """Test every estimator and strategy for kind and reproducibility."""
        data = sample_dataset(get_scenario(1), 60, seed=5).dataset
        first = estimate_variance(data, kind, strategy, tiny_settings, seed=9)
        second = estimate_variance(data, kind, strategy, tiny_settings, seed=9)
        assert first.kind == kind
        assert np.array_equal(predict_variance(first, data.xs), predict_variance(second, data.xs))

    def test_unknown_kind(self, linear_dataset, tiny_settings):
        """Test that an unknown estimator kind is rejected."""
        with pytest.raises(ValidationError):
            estimate_variance(linear_dataset, "quantile", "full", tiny_settings, seed=0)
