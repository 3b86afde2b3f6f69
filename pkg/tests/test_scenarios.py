"""Tests for the synthetic scenarios and sampling."""

import math

import numpy as np
import pytest

from reluboot.tools.scenarios import (
    SCENARIOS,
    eval_f_star,
    eval_g_star,
    f_star_values,
    g_star_values,
    get_scenario,
    sample_covariates,
    sample_dataset,
    sample_noise_law,
)
from reluboot.utils.validation import DimensionMismatchError, ValidationError


def near(value):
    return pytest.approx(value, rel=1e-10, abs=1e-10)


class TestHandValues:
    """Mean and variance functions at points computed by hand."""

    def test_scenario_one(self):
        """Test scenario 1 at hand-computed points."""
        s1 = get_scenario(1)
        assert eval_g_star(s1, [0.5, 0.5]) == 0.0
        assert eval_f_star(s1, [0.25, 0.5]) == near(math.sqrt(1.625) - 0.390625)
        assert eval_g_star(s1, [0.25, 0.5]) == near(0.25)
        assert eval_f_star(s1, [0.0, 0.0]) == near(1.0)
        assert eval_g_star(s1, [0.0, 0.0]) == near(math.sqrt(0.5))
        assert eval_f_star(s1, [1.0, 1.0]) == near(math.sqrt(3.0) + 4.0)

    def test_scenario_two(self):
        """Test scenario 2 at hand-computed points."""
        s2 = get_scenario(2)
        assert eval_f_star(s2, [0.0, 0.0]) == near(0.0)
        assert eval_g_star(s2, [0.0, 0.0]) == near(math.sqrt(0.625))
        log2_sq = math.log(2.0) ** 2
        assert eval_f_star(s2, [1.0, 0.0]) == near(log2_sq ** (1.0 / 3.0) + log2_sq)
        u_sq = (math.log(2.0) + 1.0) ** 2
        assert eval_f_star(s2, [1.0, 1.0]) == near(u_sq ** (1.0 / 3.0) + u_sq)
        assert eval_g_star(s2, [1.0, 1.0]) == near(math.sqrt(0.625))

    def test_scenario_three(self):
        """Test scenario 3 at hand-computed points."""
        s3 = get_scenario(3)
        assert eval_f_star(s3, [0.0, 1.0]) == near(2.0)
        assert eval_g_star(s3, [0.0, 1.0]) == near(1.0)
        assert eval_f_star(s3, [0.0, 0.0]) == near(1.0)
        assert eval_g_star(s3, [0.0, 0.0]) == near(math.exp(-1.0))
        t = math.tan(1.0)
        expected = t * math.sin(-2.0) + math.sqrt(t + 2.0) + 1.0 / (1.0 + t ** 2)
        assert eval_f_star(s3, [1.0, 0.0]) == near(expected)
        assert eval_g_star(s3, [1.0, 0.0]) == near(math.exp(-2.0))

    def test_scenario_four(self):
        """Test scenario 4 at the corners of the cube."""
        s4 = get_scenario(4)
        assert eval_f_star(s4, np.zeros(5)) == near(5.0)
        assert eval_g_star(s4, np.zeros(5)) == near(math.exp(-math.sqrt(1.25)) + math.sqrt(3.5))
        u = math.sin(1.0) + math.e - 1.0
        v = math.cos(1.0) + math.tanh(1.0) + 1.0
        assert eval_f_star(s4, np.ones(5)) == near((u + v) ** 2 + math.sqrt(u * v))
        assert eval_g_star(s4, np.ones(5)) == near(math.exp(-math.sqrt(7.25)) + math.sqrt(6.0))

    def test_scenario_five(self):
        """Test scenario 5 at the corners and the centre."""
        s5 = get_scenario(5)
        assert eval_g_star(s5, np.full(10, 0.5)) == near(0.0)
        assert eval_f_star(s5, np.zeros(10)) == near(0.0)
        assert eval_f_star(s5, np.ones(10)) == near(120.0)
        assert eval_g_star(s5, np.zeros(10)) == near(math.sqrt(2.5) + math.sqrt(5.0))
        assert eval_g_star(s5, np.ones(10)) == near(math.sqrt(2.5) + math.sqrt(5.0))

    def test_vectorized_matches_pointwise(self, rng):
        """Test that the vectorized mean agrees with pointwise evaluation."""
        for spec in SCENARIOS.values():
            xs = rng.uniform(size=(20, spec.dim))
            values = f_star_values(spec, xs)
            assert np.allclose(values, [eval_f_star(spec, row) for row in xs], rtol=0, atol=1e-12)


class TestProperties:
    """Structural properties of every scenario."""

    @pytest.mark.parametrize("scenario_id", [1, 2, 3, 4, 5])
    def test_variance_non_negative_and_finite(self, scenario_id):
        """Test that g is non-negative and both functions are finite."""
        spec = get_scenario(scenario_id)
        xs = np.random.default_rng(scenario_id).uniform(size=(100_000, spec.dim))
        g = g_star_values(spec, xs)
        f = f_star_values(spec, xs)
        assert np.all(g >= 0)
        assert np.all(np.isfinite(f)) and np.all(np.isfinite(g))

    def test_scenario_three_finite_on_grid(self):
        """Test that scenario 3 stays finite on a regular grid."""
        grid = np.linspace(0.0, 1.0, 101)
        xs = np.array([(a, b) for a in grid for b in grid])
        assert np.all(np.isfinite(f_star_values(get_scenario(3), xs)))

    def test_dimensions(self):
        """Test the dimension and noise law of every scenario."""
        assert [SCENARIOS[i].dim for i in range(1, 6)] == [2, 2, 2, 5, 10]
        assert [SCENARIOS[i].noise_law for i in range(1, 6)] == ["normal"] * 3 + ["uniform"] * 2

    def test_dimension_mismatch(self):
        """Test that points of the wrong dimension are rejected."""
        with pytest.raises(DimensionMismatchError):
            eval_f_star(get_scenario(1), [0.1, 0.2, 0.3])
        with pytest.raises(DimensionMismatchError):
            g_star_values(get_scenario(4), np.zeros((3, 2)))

    def test_unknown_scenario(self):
        """Test that an unknown scenario id is rejected."""
        with pytest.raises(ValidationError):
            get_scenario(6)


class TestNoise:
    """Tests for the unit-variance noise laws."""

    @pytest.mark.parametrize("law", ["normal", "uniform"])
    def test_moments(self, law):
        """Test zero mean and unit variance of each noise law."""
        draws = sample_noise_law(law, 100_000, np.random.default_rng(0))
        assert abs(draws.mean()) < 0.02
        assert abs(draws.var() - 1.0) < 0.03

    def test_uniform_support(self):
        """Test that uniform noise stays within sqrt(3)."""
        draws = sample_noise_law("uniform", 10_000, np.random.default_rng(1))
        assert np.all(np.abs(draws) <= math.sqrt(3.0))

    def test_unknown_law(self):
        """Test that an unknown noise law is rejected."""
        with pytest.raises(ValidationError):
            sample_noise_law("cauchy", 3, np.random.default_rng(0))


class TestSampling:
    """Tests for sample_dataset."""

    def test_responses_reconstruct(self):
        """Test that y = f + sqrt(g) * noise on the unit cube."""
        sample = sample_dataset(get_scenario(2), 500, seed=3)
        data = sample.dataset
        assert data.n == 500 and data.d == 2
        assert np.all((data.xs >= 0) & (data.xs <= 1))
        expected = sample.f_values + np.sqrt(sample.g_values) * sample.noise
        assert np.array_equal(data.ys, expected)

    def test_same_seed_same_sample(self):
        """Test that sampling is reproducible for a fixed seed."""
        a = sample_dataset(get_scenario(4), 50, seed=11)
        b = sample_dataset(get_scenario(4), 50, seed=11)
        c = sample_dataset(get_scenario(4), 50, seed=12)
        assert np.array_equal(a.dataset.xs, b.dataset.xs)
        assert np.array_equal(a.dataset.ys, b.dataset.ys)
        assert not np.array_equal(a.dataset.ys, c.dataset.ys)

    def test_covariates_match_sample(self):
        """Test that sample_covariates reproduces the dataset covariates."""
        spec = get_scenario(5)
        assert np.array_equal(sample_covariates(spec, 30, seed=2), sample_dataset(spec, 30, seed=2).dataset.xs)

    def test_rejects_empty_sample(self):
        """Test that a sample size of zero is rejected."""
        with pytest.raises(ValidationError):
            sample_dataset(get_scenario(1), 0, seed=0)
