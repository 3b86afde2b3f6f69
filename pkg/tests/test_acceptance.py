"""Desk-scale statistical checks of the full pipelines.

These train hundreds of full-size networks and take tens of minutes.
Run with: RELUBOOT_RUN_SLOW=1 pytest tests/test_acceptance.py -v
"""

import math
import os

import numpy as np
import pytest

from reluboot.constants import ENV_RUN_SLOW
from reluboot.models import CiConfig, FitSettings
from reluboot.tools.bootstrap_ci import build_interval, compute_delta
from reluboot.tools.evaluation import run_coverage_experiment, run_real_data_study, run_variance_benchmark
from reluboot.tools.scenarios import get_scenario, sample_dataset
from reluboot.utils.io import bundled_dataset_path, prepare_table

pytestmark = [
    pytest.mark.slow,
    pytest.mark.skipif(not os.getenv(ENV_RUN_SLOW), reason=f"set {ENV_RUN_SLOW}=1 to run desk-scale checks"),
]


@pytest.mark.asyncio
async def test_residual_beats_direct_on_scenario_one():
    """Test the residual estimator on scenario 1 (n=2000, 10 trials)."""
    reports = await run_variance_benchmark(get_scenario(1), 2000, 10, "full", ["residual", "direct"], seed=0)
    assert reports["residual"].mean <= 0.05
    assert reports["residual"].mean < reports["direct"].mean


@pytest.mark.asyncio
async def test_robust_interval_coverage():
    """Test coverage of the theoretical-variant interval (B=100, B_tilde=50)."""
    ci = CiConfig(B=100, B_tilde=50, fit=FitSettings())
    report = await run_coverage_experiment(get_scenario(1), 5000, 0.1, "nn", 5, 20, seed=0, ci=ci)
    assert report.coverage >= 0.85
    assert math.isfinite(report.mean_half_width) and report.mean_half_width > 0


@pytest.mark.asyncio
async def test_half_width_structure_at_scale():
    """Test that the reported half-width is reproducible from its diagnostics."""
    data = sample_dataset(get_scenario(1), 2000, seed=5).dataset
    result = await build_interval(CiConfig(B=20, B_tilde=10), data)
    assert result.half_width == result.recomputed_half_width()
    d = result.diagnostics
    assert compute_delta(d.a_alpha, d.b_alpha, result.alpha, 2 * result.B_tilde) < result.half_width


@pytest.mark.asyncio
async def test_stand_in_prediction_coverage():
    """Test 95% prediction intervals on the bundled housing stand-in."""
    table = prepare_table(bundled_dataset_path(), ["MedInc", "AveOccup", "Population"], "MedHouseVal", take_log=True)
    report = await run_real_data_study(table, 150, 5, alphas=(0.05,), methods=["nn_res"], ci_methods=())
    coverages = [r["coverage"] for r in report.pi_records]
    assert float(np.mean(coverages)) >= 0.85
