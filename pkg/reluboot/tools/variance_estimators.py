"""Conditional-variance estimators: residual-based, direct and homoscedastic."""

import logging
from typing import Callable, Optional, Tuple, Union

import numpy as np

from ..constants import ERROR_MESSAGES
from ..models import Dataset, FitSettings, FittedMean, FittedVariance, NetworkArch, TrainConfig
from ..utils.seeding import derive_seed
from ..utils.validation import DimensionMismatchError, ValidationError, require, validate_clip_bound, validate_strategy
from .relu_net import clip, init_network, predict, train

logger = logging.getLogger(__name__)

VarianceLike = Union[FittedVariance, Callable[[np.ndarray], np.ndarray]]


def _data_bound(values: np.ndarray, what: str) -> float:
    """Largest value as a clip bound, falling back to 1 when everything is zero."""
    bound = float(np.max(values)) if values.size else 0.0
    if bound <= 0.0:
        logger.warning(f"All {what} are zero; using clip bound 1.0")
        return 1.0
    return bound


def _check_bound(bound: float) -> float:
    require(validate_clip_bound(bound))
    return float(bound)


def _fit_network(arch: NetworkArch, xs: np.ndarray, targets: np.ndarray, cfg: TrainConfig):
    net = init_network(arch, derive_seed(cfg.rng_seed, "init"))
    return train(net, xs, targets, cfg)


def fit_mean(
    train_data: Dataset,
    arch: NetworkArch,
    cfg: TrainConfig,
    clip_bound: Optional[float] = None,
) -> FittedMean:
    """
    Least-squares ReLU fit of the conditional mean, clipped at A.

    Args:
        train_data: Block the mean is trained on
        arch: Mean network architecture
        cfg: Training settings (the seed also drives initialization)
        clip_bound: A; defaults to max |y_i| over the block

    Returns:
        FittedMean whose predictions lie in [-A, A]
    """
    if arch.input_dim != train_data.d:
        raise DimensionMismatchError("fit_mean", arch.input_dim, train_data.d)
    bound = _check_bound(clip_bound) if clip_bound is not None else _data_bound(np.abs(train_data.ys), "responses")
    net = _fit_network(arch, train_data.xs, train_data.ys, cfg)
    logger.info(f"Mean fit on {train_data.n} rows: train MSE {net.train_loss}, A={bound:.6g}")
    return FittedMean(net=net, clip_bound=bound)


def predict_mean(mean: FittedMean, xs: np.ndarray) -> np.ndarray:
    """Clipped mean predictions f_A(x)."""
    return clip(predict(mean.net, xs), mean.clip_bound)


def residuals(mean: FittedMean, data: Dataset) -> np.ndarray:
    """eps_i = y_i - f_A(x_i)."""
    return data.ys - predict_mean(mean, data.xs)


def fit_variance_residual(
    mean: FittedMean,
    var_data: Dataset,
    arch: NetworkArch,
    cfg: TrainConfig,
    clip_bound: Optional[float] = None,
) -> FittedVariance:
    """
    Regress squared residuals of the clipped mean on the covariates.

    Args:
        mean: Fitted mean
        var_data: Block for the variance stage (same block under the full-data
            strategy, the held-out half under the split strategy)
        arch: Variance network architecture
        cfg: Training settings
        clip_bound: B; defaults to max squared residual

    Returns:
        FittedVariance of kind "residual"
    """
    squared = residuals(mean, var_data) ** 2
    bound = _check_bound(clip_bound) if clip_bound is not None else _data_bound(squared, "squared residuals")
    net = _fit_network(arch, var_data.xs, squared, cfg)
    logger.info(f"Residual variance fit on {var_data.n} rows: train MSE {net.train_loss}, B={bound:.6g}")
    return FittedVariance(kind="residual", clip_bound=bound, net=net)


def fit_variance_direct(
    mean: FittedMean,
    data: Dataset,
    arch: NetworkArch,
    cfg: TrainConfig,
    clip_bound: Optional[float] = None,
) -> FittedVariance:
    """
    Direct estimator h(x) - f_A(x)^2 with h fit on squared responses.

    h is clipped at clip_bound (default max y_i^2); the difference itself is
    left unclipped and may be negative.
    """
    squared = data.ys ** 2
    bound = _check_bound(clip_bound) if clip_bound is not None else _data_bound(squared, "squared responses")
    net = _fit_network(arch, data.xs, squared, cfg)
    logger.info(f"Second-moment fit on {data.n} rows: train MSE {net.train_loss}")
    return FittedVariance(kind="direct", clip_bound=bound, net=net, mean=mean)


def fit_sigma2_homoscedastic(
    mean: FittedMean,
    data: Dataset,
    clip_bound: Optional[float] = None,
) -> FittedVariance:
    """
    Minimizer over v in [0, B] of sum (eps_i^2 - v)^2.

    The objective is a convex quadratic in v, so the minimizer is the mean
    squared residual projected onto [0, B].
    """
    squared = residuals(mean, data) ** 2
    bound = _check_bound(clip_bound) if clip_bound is not None else _data_bound(squared, "squared residuals")
    sigma2 = float(np.clip(squared.mean(), 0.0, bound))
    logger.info(f"Homoscedastic variance estimate {sigma2:.6g} (B={bound:.6g})")
    return FittedVariance(kind="homoscedastic", clip_bound=bound, sigma2=sigma2)


def predict_variance(est: VarianceLike, xs: np.ndarray) -> np.ndarray:
    """Evaluate a fitted variance estimator (or any callable) on the rows of xs."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if not isinstance(est, FittedVariance):
        return np.asarray(est(xs), dtype=np.float64)
    if est.kind == "homoscedastic":
        return np.full(xs.shape[0], est.sigma2)
    if est.kind == "residual":
        return clip(predict(est.net, xs), est.clip_bound)
    second_moment = clip(predict(est.net, xs), est.clip_bound)
    return second_moment - predict_mean(est.mean, xs) ** 2


def variance_mse(
    est: VarianceLike,
    xs: np.ndarray,
    g_star: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
) -> float:
    """(1/n) sum (g_hat(x_i) - g*(x_i))^2 over the rows of xs."""
    truth = g_star(xs) if callable(g_star) else np.asarray(g_star, dtype=np.float64)
    estimate = predict_variance(est, xs)
    if truth.shape != estimate.shape:
        raise DimensionMismatchError("variance_mse", estimate.shape, truth.shape)
    diff = estimate - truth
    return float(diff @ diff) / diff.shape[0]


def strategy_blocks(data: Dataset, strategy: str) -> Tuple[Dataset, Dataset]:
    """
    Blocks for the mean and variance stages.

    full  -> both stages use every row
    split -> mean on the first half, variance on the remaining half
    """
    require(validate_strategy(strategy))
    if strategy == "full":
        return data, data
    if data.n < 2:
        raise ValidationError(f"The split strategy needs at least 2 rows, got {data.n}")
    half = data.n // 2
    return data.subset(range(half)), data.subset(range(half, data.n))


def estimate_variance(
    data: Dataset,
    kind: str,
    strategy: str,
    settings: FitSettings,
    seed: int,
) -> FittedVariance:
    """
    Fit the mean and one variance estimator end to end under a strategy.

    Args:
        data: Full sample
        kind: "residual", "direct" or "homoscedastic"
        strategy: "full" or "split"
        settings: Architectures and training settings
        seed: Master seed for this fit; mean and variance stages get derived streams
    """
    mean_block, var_block = strategy_blocks(data, strategy)
    mean = fit_mean(
        mean_block,
        settings.mean_arch(data.d),
        settings.train.with_seed(derive_seed(seed, "mean")),
    )
    var_cfg = settings.var_train.with_seed(derive_seed(seed, "variance"))
    if kind == "residual":
        return fit_variance_residual(mean, var_block, settings.var_arch(data.d), var_cfg)
    if kind == "direct":
        return fit_variance_direct(mean, var_block, settings.var_arch(data.d), var_cfg)
    if kind == "homoscedastic":
        return fit_sigma2_homoscedastic(mean, var_block)
    raise ValidationError(ERROR_MESSAGES["invalid_variant"].format(
        what="variance kind", value=kind, allowed="residual, direct, homoscedastic"
    ))
