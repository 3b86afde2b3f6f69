"""Numerical tools for ReluBoot."""

from .relu_net import (
    adam_step,
    backprop_grads,
    clip,
    forward,
    gradcheck,
    init_adam_state,
    init_network,
    mse_loss,
    predict,
    theoretical_arch,
    train,
)
from .variance_estimators import (
    estimate_variance,
    fit_mean,
    fit_sigma2_homoscedastic,
    fit_variance_direct,
    fit_variance_residual,
    predict_mean,
    predict_variance,
    variance_mse,
)
from .bootstrap_ci import (
    build_interval,
    ci_interval,
    compute_a0,
    compute_a_alpha,
    compute_b_alpha,
    compute_delta,
    naive_bootstrap_interval,
    order_statistic_quantile,
    run_steps_one_to_three,
    standard_bootstrap_interval,
)
from .scenarios import SCENARIOS, eval_f_star, eval_g_star, get_scenario, sample_dataset
from .evaluation import (
    prediction_interval,
    run_coverage_experiment,
    run_real_data_study,
    run_variance_benchmark,
)

__all__ = [
    # Networks
    "adam_step",
    "backprop_grads",
    "clip",
    "forward",
    "gradcheck",
    "init_adam_state",
    "init_network",
    "mse_loss",
    "predict",
    "theoretical_arch",
    "train",
    # Variance estimation
    "estimate_variance",
    "fit_mean",
    "fit_sigma2_homoscedastic",
    "fit_variance_direct",
    "fit_variance_residual",
    "predict_mean",
    "predict_variance",
    "variance_mse",
    # Bootstrap intervals
    "build_interval",
    "ci_interval",
    "compute_a0",
    "compute_a_alpha",
    "compute_b_alpha",
    "compute_delta",
    "naive_bootstrap_interval",
    "order_statistic_quantile",
    "run_steps_one_to_three",
    "standard_bootstrap_interval",
    # Scenarios
    "SCENARIOS",
    "eval_f_star",
    "eval_g_star",
    "get_scenario",
    "sample_dataset",
    # Experiments
    "prediction_interval",
    "run_coverage_experiment",
    "run_real_data_study",
    "run_variance_benchmark",
]
