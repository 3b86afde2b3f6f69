"""Tests for the experiment protocols in reluboot.tools.evaluation."""

import numpy as np
import pytest

from reluboot.models import CiConfig, Dataset, Interval, TabularDataset
from reluboot.tools import evaluation
from reluboot.tools.evaluation import (
    coverage_of,
    coverage_rows,
    prange_of,
    prediction_interval,
    real_data_rows,
    run_coverage_experiment,
    run_real_data_study,
    run_variance_benchmark,
    train_test_split,
    variance_rows,
)
from reluboot.tools.scenarios import get_scenario, sample_dataset
from reluboot.utils.io import bundled_dataset_path, prepare_table
from reluboot.utils.validation import StageError, ValidationError


class TestVarianceBenchmark:
    """Tests for run_variance_benchmark."""

    @pytest.mark.asyncio
    async def test_oracle_scores_zero(self, mocker):
        """Test that the true variance scores zero and a zero estimate does not."""
        spec = get_scenario(1)
        mocker.patch.dict(evaluation.VARIANCE_ESTIMATORS, {
            "oracle": lambda data, strategy, settings, seed: spec.g_star,
            "zero": lambda data, strategy, settings, seed: (lambda xs: np.zeros(xs.shape[0])),
        })
        reports = await run_variance_benchmark(spec, 200, 3, "full", ["oracle", "zero"], seed=0)

        assert reports["oracle"].mses == [0.0, 0.0, 0.0]
        zero = reports["zero"]
        assert all(m > 0 for m in zero.mses)
        assert zero.mean == pytest.approx(np.mean(zero.mses))
        assert zero.std == pytest.approx(np.std(zero.mses, ddof=1))

    @pytest.mark.asyncio
    async def test_rows_per_trial_then_aggregates(self, mocker):
        """Test one row per trial followed by the mean and std rows."""
        spec = get_scenario(2)
        mocker.patch.dict(evaluation.VARIANCE_ESTIMATORS, {"oracle": lambda data, strategy, settings, seed: spec.g_star})
        reports = await run_variance_benchmark(spec, 50, 4, "split", ["oracle"], seed=1)
        rows = variance_rows(reports)
        assert [row["trial"] for row in rows] == [1, 2, 3, 4, "mean", "std"]
        assert all(row["strategy"] == "split" and row["method"] == "oracle" for row in rows)

    def test_aggregate_uses_sample_std(self):
        """Test that aggregates use the sample std and 0 for one trial."""
        assert evaluation.aggregate([1.0, 2.0, 3.0]) == (2.0, 1.0)
        assert evaluation.aggregate([0.5]) == (0.5, 0.0)

    @pytest.mark.asyncio
    async def test_trials_are_reproducible(self, tiny_settings):
        """Test that trials are reproducible for any thread count."""
        spec = get_scenario(1)
        first = await run_variance_benchmark(spec, 80, 2, "full", ["residual"], seed=4, settings=tiny_settings)
        second = await run_variance_benchmark(spec, 80, 2, "full", ["residual"], seed=4, settings=tiny_settings, threads=2)
        assert first["residual"].mses == second["residual"].mses

    @pytest.mark.asyncio
    async def test_unknown_estimator(self):
        """Test that an unknown estimator name is rejected."""
        with pytest.raises(ValidationError):
            await run_variance_benchmark(get_scenario(1), 50, 1, "full", ["kernel"], seed=0)

    @pytest.mark.asyncio
    async def test_failure_names_trial(self, mocker):
        """Test that a failing trial is wrapped in StageError naming it."""
        def broken(data, strategy, settings, seed):
            raise RuntimeError("boom")

        mocker.patch.dict(evaluation.VARIANCE_ESTIMATORS, {"broken": broken})
        with pytest.raises(StageError) as excinfo:
            await run_variance_benchmark(get_scenario(1), 20, 1, "full", ["broken"], seed=0, threads=1)
        assert excinfo.value.stage == "trial 1 (broken)"


class TestCoverage:
    """Tests for coverage and PRange."""

    def test_coverage_matches_brute_force(self, rng):
        """Test coverage against counting covered points by hand."""
        for _ in range(50):
            m = int(rng.integers(1, 30))
            lower = rng.normal(size=m)
            upper = lower + rng.uniform(0, 2, size=m)
            truth = rng.normal(size=m)
            expected = sum(1 for lo, hi, t in zip(lower, upper, truth) if lo <= t <= hi) / m
            assert coverage_of(Interval(lower=lower, upper=upper), truth) == expected

    def test_prange(self):
        """Test PRange and its undefined case for a constant truth."""
        interval = Interval(lower=np.array([0.0, 1.0]), upper=np.array([1.0, 4.0]))
        assert prange_of(interval, np.array([0.0, 4.0])) == pytest.approx(0.5)
        assert prange_of(interval, np.array([2.0, 2.0])) is None

    @pytest.mark.asyncio
    async def test_wide_and_exact_intervals(self, mocker):
        """Test coverage and PRange for very wide and exact intervals."""
        spec = get_scenario(1)

        async def wide(cfg, data, x_new, threads=None):
            return Interval(lower=np.full(len(x_new), -1e6), upper=np.full(len(x_new), 1e6))

        async def exact(cfg, data, x_new, threads=None):
            truth = spec.f_star(x_new)
            return Interval(lower=truth, upper=truth)

        mocker.patch.dict(evaluation.INTERVAL_METHODS, {"wide": wide, "exact": exact})
        wide_report = await run_coverage_experiment(spec, 16, 0.1, "wide", 3, 10, seed=0)
        exact_report = await run_coverage_experiment(spec, 16, 0.1, "exact", 3, 10, seed=0)

        assert wide_report.coverage == 1.0 and wide_report.prange > 1.0
        assert exact_report.coverage == 1.0 and exact_report.prange == 0.0
        rows = coverage_rows(exact_report)
        assert [row["dataset"] for row in rows] == [1, 2, 3, "mean"]
        assert exact_report.diagnostics == []

    @pytest.mark.asyncio
    async def test_single_point_range_is_degenerate(self, mocker):
        """Test that one prediction point per dataset marks the report degenerate."""
        async def wide(cfg, data, x_new, threads=None):
            return Interval(lower=np.full(len(x_new), -1.0), upper=np.full(len(x_new), 1.0))

        mocker.patch.dict(evaluation.INTERVAL_METHODS, {"wide": wide})
        report = await run_coverage_experiment(get_scenario(1), 16, 0.1, "wide", 2, 1, seed=0)
        assert report.degenerate
        assert all(np.isnan(p) for p in report.per_dataset_prange)

    @pytest.mark.asyncio
    async def test_builder_failure_is_labelled(self, mocker):
        """Test that a failing interval builder is wrapped in StageError naming it."""
        async def broken(cfg, data, x_new, threads=None):
            raise ArithmeticError("bad")

        mocker.patch.dict(evaluation.INTERVAL_METHODS, {"broken": broken})
        with pytest.raises(StageError) as excinfo:
            await run_coverage_experiment(get_scenario(1), 16, 0.1, "broken", 1, 5, seed=0)
        assert excinfo.value.stage == "dataset 1 (broken)"

    @pytest.mark.asyncio
    async def test_robust_method_end_to_end(self, tiny_ci):
        """Test the robust interval end to end with per-dataset diagnostics."""
        report = await run_coverage_experiment(get_scenario(1), 64, 0.1, "nn", 2, 5, seed=3, ci=tiny_ci)
        assert 0.0 <= report.coverage <= 1.0
        assert len(report.per_dataset_coverage) == 2
        assert report.mean_half_width > 0
        assert [d["dataset"] for d in report.diagnostics] == [1, 2]
        first = report.diagnostics[0]
        assert first["B"] == tiny_ci.B and first["alpha"] == 0.1
        assert first["delta"] > first["b_alpha"] > 0

    @pytest.mark.asyncio
    async def test_unknown_method(self):
        """Test that an unknown interval method is rejected."""
        with pytest.raises(ValidationError):
            await run_coverage_experiment(get_scenario(1), 16, 0.1, "jackknife", 1, 5, seed=0)


class TestPredictionInterval:
    """Tests for the plug-in prediction interval."""

    def test_two_point_residuals(self):
        """Test the prediction interval for residuals of +-1."""
        train = Dataset(xs=np.array([[0.1], [0.9]]), ys=np.array([-1.0, 1.0]))
        interval = prediction_interval(
            lambda xs: np.zeros(xs.shape[0]), lambda xs: np.ones(xs.shape[0]),
            train, np.array([[0.3], [0.7]]), alpha=0.5,
        )
        assert np.array_equal(interval.lower, [-1.0, -1.0])
        assert np.array_equal(interval.upper, [1.0, 1.0])

    def test_perfect_fit_collapses_to_mean(self):
        """Test that a perfect fit gives a zero-width interval at the mean."""
        xs = np.linspace(0, 1, 20).reshape(-1, 1)
        train = Dataset(xs=xs, ys=3.0 * xs[:, 0])
        mean = lambda q: 3.0 * q[:, 0]
        interval = prediction_interval(mean, lambda q: np.zeros(q.shape[0]), train, xs[:5], alpha=0.1)
        assert np.array_equal(interval.lower, mean(xs[:5]))
        assert np.array_equal(interval.upper, mean(xs[:5]))

    def test_oracle_training_coverage(self):
        """Test that the true mean and variance cover about 1 - alpha of the points."""
        spec = get_scenario(1)
        train = sample_dataset(spec, 1000, seed=8).dataset
        interval = prediction_interval(spec.f_star, spec.g_star, train, train.xs, alpha=0.1)
        assert abs(coverage_of(interval, train.ys) - 0.9) < 0.005

    def test_scale_follows_variance(self):
        """Test that the width scales with sqrt of the variance."""
        train = Dataset(xs=np.array([[0.1], [0.9]]), ys=np.array([-1.0, 1.0]))
        var = lambda q: np.where(q[:, 0] < 0.5, 1.0, 4.0)
        interval = prediction_interval(lambda q: np.zeros(q.shape[0]), var, train, np.array([[0.2], [0.8]]), alpha=0.5)
        assert np.allclose(interval.width, [1.5, 3.0])


class TestRealData:
    """Tests for the real-data protocol."""

    def test_train_test_split(self):
        """Test the train and test partition and the rejection of an empty test set."""
        train, test = train_test_split(10, 7, seed=0)
        assert len(train) == 7 and len(test) == 3
        assert sorted(np.concatenate([train, test]).tolist()) == list(range(10))
        with pytest.raises(ValidationError):
            train_test_split(10, 10, seed=0)

    @pytest.mark.asyncio
    async def test_constant_target_full_coverage(self, mocker):
        """Test full coverage and the summaries on a constant target."""
        rng = np.random.default_rng(0)
        table = TabularDataset(
            features=rng.uniform(size=(40, 2)), target=np.full(40, 3.0),
            feature_names=["a", "b"], target_name="y",
        )
        constant = lambda train, settings, seed: (
            lambda xs: np.full(xs.shape[0], 3.0),
            lambda xs: np.ones(xs.shape[0]),
        )
        mocker.patch.dict(evaluation.PI_FITTERS, {"const": constant})

        report = await run_real_data_study(table, 30, 3, alphas=(0.05, 0.1), methods=["const"], ci_methods=())

        assert len(report.pi_records) == 6
        assert all(record["coverage"] == 1.0 for record in report.pi_records)
        assert report.ci_records == []
        assert report.pi_summary()["const"][0.1] == (1.0, 0.0)

    @pytest.mark.asyncio
    async def test_bundled_table(self, tiny_settings):
        """Test every prediction and confidence method on the bundled table."""
        table = prepare_table(bundled_dataset_path(), ["MedInc", "AveOccup", "Population"], "MedHouseVal", take_log=True)
        ci = CiConfig(B=4, B_tilde=2, fit=tiny_settings, standard_resamples=3)
        report = await run_real_data_study(
            table, 40, 1, alphas=(0.1,), seed=2, methods=["nn_res", "nn_dir"],
            ci_methods=("nn", "naive"), fit=tiny_settings, ci=ci,
        )
        pi_rows, ci_rows = real_data_rows(report)
        assert [row["method"] for row in pi_rows] == ["nn_res", "nn_dir"]
        assert [row["method"] for row in ci_rows] == ["nn", "naive"]
        assert all(0.0 <= row["coverage"] <= 1.0 for row in pi_rows)
        assert ci_rows[0]["length"] > 0 and ci_rows[1]["length"] >= 0
        assert list(pi_rows[0]) == ["split", "method", "alpha", "coverage"]
        assert report.ci_summary()["nn"][0.1] == (ci_rows[0]["length"], 0.0)

    @pytest.mark.asyncio
    async def test_invalid_alpha(self):
        """Test that alpha outside (0, 1) is rejected."""
        table = TabularDataset(features=np.zeros((10, 1)), target=np.ones(10), feature_names=["a"], target_name="y")
        with pytest.raises(ValidationError):
            await run_real_data_study(table, 5, 1, alphas=(1.5,))
