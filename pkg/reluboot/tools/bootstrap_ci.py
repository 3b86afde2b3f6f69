"""Robust residual-bootstrap confidence intervals for the conditional mean.

The data are split into four blocks I1..I4:

  Step 1  mean network on I1, clipped at A_n
  Step 2  residual variance network on I2, clipped at A_n
  Step 3  standardized residuals on I2 form an empirical law F; B + B_tilde
          replicate responses on I3 are drawn from it and refit
  Step 4  a1 = (1 - alpha/(4 B_tilde))-quantile of the held-out I4 losses
          of replicates 1..B
  Step 5  a(alpha) from a1, deviation terms, replicate B+1's variance and a0
  Step 6  Delta(alpha) = 2 sqrt(a(alpha)/(alpha B_tilde)) + b(alpha); the
          interval is the mean of replicates B+1..B+B_tilde plus/minus Delta

Naive (replicate quantiles) and standard (pairs resampling) bootstrap
intervals are provided for comparison.
"""

import logging
import math
from contextlib import contextmanager
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..constants import A0_VARIANTS, B_VARIANTS, ERROR_MESSAGES, QUANTILE_SLACK, VARIANCE_FLOOR
from ..models import (
    CiConfig,
    CiDiagnostics,
    CiResult,
    Dataset,
    EmpiricalDistribution,
    FittedMean,
    FittedVariance,
    Interval,
    SplitIndices,
)
from ..utils.concurrency import gather_bounded
from ..utils.seeding import derive_seed, make_rng
from ..utils.validation import (
    DegenerateDistributionError,
    MissingContextError,
    StageError,
    TrainingDivergedError,
    ValidationError,
    require,
    validate_alpha,
    validate_choice,
    validate_split_size,
)
from .relu_net import predict
from .variance_estimators import (
    fit_mean,
    fit_sigma2_homoscedastic,
    fit_variance_residual,
    predict_mean,
    predict_variance,
    residuals,
)

logger = logging.getLogger(__name__)


@contextmanager
def _stage(label: str):
    """Attach a stage label to anything that fails inside the block."""
    try:
        yield
    except (StageError, ValidationError):
        raise
    except Exception as e:
        raise StageError(label, e) from e


def split_indices(n: int, seed: int) -> SplitIndices:
    """Random partition of range(n) into four blocks of size floor/ceil(n/4)."""
    require(validate_split_size(n))
    order = make_rng(seed).permutation(n)
    blocks = [sorted(int(i) for i in block) for block in np.array_split(order, 4)]
    return SplitIndices(n=n, i1=blocks[0], i2=blocks[1], i3=blocks[2], i4=blocks[3])


def standardize(values: np.ndarray) -> EmpiricalDistribution:
    """Center and scale values to sample mean 0 and variance 1 (divisor n)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DegenerateDistributionError("the block is empty")
    spread = float(values.std())
    if not math.isfinite(spread) or spread == 0.0:
        raise DegenerateDistributionError(f"standard deviation is {spread}")
    return EmpiricalDistribution(atoms=(values - values.mean()) / spread)


def standardized_residuals(mean: FittedMean, var: FittedVariance, block: Dataset) -> EmpiricalDistribution:
    """
    Standardized residuals (y - f_A(x)) / sqrt(|g_A(x)| + tau) on a block.

    tau is VARIANCE_FLOOR and only guards the division.
    """
    scale = np.sqrt(np.abs(predict_variance(var, block.xs)) + VARIANCE_FLOOR)
    return standardize(residuals(mean, block) / scale)


def sample_noise(dist: EmpiricalDistribution, count: int, seed: int) -> np.ndarray:
    """I.i.d. draws with replacement from the atoms."""
    picks = make_rng(seed).integers(0, dist.atoms.size, size=count)
    return dist.atoms[picks]


def make_bootstrap_responses(
    mean: FittedMean,
    var: FittedVariance,
    block3: Dataset,
    dist: EmpiricalDistribution,
    j: int,
    seed: int,
) -> np.ndarray:
    """Replicate responses y_j = f_A(x) + sqrt(|g_A(x)|) * eps_j on I3."""
    noise = sample_noise(dist, block3.n, derive_seed(seed, f"replicate/{j}/noise"))
    return predict_mean(mean, block3.xs) + np.sqrt(np.abs(predict_variance(var, block3.xs))) * noise


def order_statistic_quantile(values: Sequence[float], level: float) -> float:
    """
    Level-quantile as the ceil(level * m)-th smallest value (1-based).

    The index is clamped to [1, m]; a tiny slack keeps products such as
    0.95 * 100 from rounding up past the intended order statistic.
    """
    ordered = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    if ordered.size == 0:
        raise ValidationError(ERROR_MESSAGES["empty_values"].format(where="order_statistic_quantile"))
    index = math.ceil(level * ordered.size - QUANTILE_SLACK)
    index = min(max(index, 1), ordered.size)
    return float(ordered[index - 1])


def quantile_interval(predictions: np.ndarray, alpha: float) -> Interval:
    """Pointwise (alpha/2, 1 - alpha/2) order-statistic quantiles over rows."""
    predictions = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    ordered = np.sort(predictions, axis=0)
    m = ordered.shape[0]

    def pick(level: float) -> np.ndarray:
        index = min(max(math.ceil(level * m - QUANTILE_SLACK), 1), m)
        return ordered[index - 1]

    return Interval(lower=pick(alpha / 2.0), upper=pick(1.0 - alpha / 2.0))


def replicate_losses(means: Sequence[FittedMean], block4: Dataset) -> np.ndarray:
    """Held-out MSE (1/|I4|) sum (y_i - f_j(x_i))^2 of each replicate."""
    return np.array([float(np.mean((block4.ys - predict_mean(m, block4.xs)) ** 2)) for m in means])


def quantile_a1(losses: Sequence[float], alpha: float, B_tilde: int) -> float:
    """The (1 - alpha/(4 B_tilde))-quantile of the B held-out losses."""
    require(validate_alpha(alpha))
    return order_statistic_quantile(losses, 1.0 - alpha / (4.0 * B_tilde))


class CiContext(BaseModel):
    """Inputs of the a0, b(alpha) and a(alpha) formulas."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(..., ge=2, description="Full sample size")
    A_n: float = Field(0.0, ge=0)
    B_tilde: int = Field(1, ge=1)
    log_power: float = Field(2.0, gt=0)
    ys: Optional[np.ndarray] = Field(None, description="All n responses (for y-bar and Var(Y))")
    y_i4: Optional[np.ndarray] = None
    f_i4: Optional[np.ndarray] = Field(None, description="Replicate B+1 clipped mean on I4")
    g_i4: Optional[np.ndarray] = Field(None, description="Replicate B+1 clipped variance on I4")
    sigma2: Optional[float] = Field(None, description="Homoscedastic variance estimate")

    @property
    def mean_g(self) -> float:
        if self.g_i4 is None:
            raise MissingContextError("a(alpha)", "replicate B+1 variance on I4")
        return float(np.mean(self.g_i4))

    def log_factor(self) -> float:
        return math.log(self.n) ** self.log_power


def compute_a0(variant: str, context: CiContext, alpha: float) -> float:
    """
    Correction a0.

    theoretical   -> alpha / (100 log^s n)
    empirical     -> |Var(Y) - mean_I4 (f_{B+1} - y_bar)^2 - mean_I4 g_{B+1}|
    homoscedastic -> |sigma2 - mean_I4 g_{B+1}|
    """
    require(validate_choice("a0 variant", variant, A0_VARIANTS))
    if variant == "theoretical":
        return alpha / (100.0 * context.log_factor())
    if variant == "empirical":
        missing = [name for name in ("ys", "f_i4", "g_i4") if getattr(context, name) is None]
        if missing:
            raise MissingContextError(variant, ", ".join(missing))
        y_bar = float(np.mean(context.ys))
        var_y = float(np.var(context.ys, ddof=1))
        explained = float(np.mean((context.f_i4 - y_bar) ** 2))
        return abs(var_y - explained - context.mean_g)
    if context.sigma2 is None or context.g_i4 is None:
        raise MissingContextError(variant, "sigma2 and replicate B+1 variance on I4")
    return abs(context.sigma2 - context.mean_g)


def compute_b_alpha(variant: str, context: CiContext, alpha: float) -> float:
    """
    Width floor b(alpha).

    theoretical -> 1 / (100 log^s n)
    empirical   -> 32 / (5 alpha (1 - 0.58 alpha)) * |mean_I4 (f_{B+1} - y)^2 - mean_I4 g_{B+1}|^(1/2)
    """
    require(validate_alpha(alpha))
    require(validate_choice("b(alpha) variant", variant, B_VARIANTS))
    if variant == "theoretical":
        return 1.0 / (100.0 * context.log_factor())
    missing = [name for name in ("y_i4", "f_i4", "g_i4") if getattr(context, name) is None]
    if missing:
        raise MissingContextError(variant, ", ".join(missing))
    gap = abs(float(np.mean((context.f_i4 - context.y_i4) ** 2)) - context.mean_g)
    return 32.0 / (5.0 * alpha * (1.0 - 0.58 * alpha)) * math.sqrt(gap)


def deviation_terms(A_n: float, n: int, alpha: float, B_tilde: int) -> Tuple[float, float]:
    """A_n^2 sqrt(32[log(8/alpha)+log B_tilde]/n) and A_n sqrt(8[log(64/alpha)+log B_tilde]/n)."""
    log_b = math.log(B_tilde)
    a2 = A_n ** 2 * math.sqrt(32.0 * (math.log(8.0 / alpha) + log_b) / n)
    a3 = A_n * math.sqrt(8.0 * (math.log(64.0 / alpha) + log_b) / n)
    return a2, a3


def compute_a_alpha(a1: float, a0: float, context: CiContext, alpha: float) -> float:
    """a(alpha) = |a1 + deviation terms - mean_I4 g_{B+1} + a0| with n the full sample size."""
    require(validate_alpha(alpha))
    a2, a3 = deviation_terms(context.A_n, context.n, alpha, context.B_tilde)
    return abs(a1 + a2 + a3 - context.mean_g + a0)


def compute_delta(a_alpha: float, b_alpha: float, alpha: float, B_tilde: int) -> float:
    """Delta(alpha) = 2 sqrt(a(alpha) / (alpha B_tilde)) + b(alpha)."""
    return 2.0 * math.sqrt(a_alpha / (alpha * B_tilde)) + b_alpha


class ReplicateFits(BaseModel):
    """Replicate mean fits 1..B+B_tilde and the variance fit of replicate B+1."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    means: List[FittedMean]
    variance: FittedVariance


class BootstrapState(BaseModel):
    """Everything Steps 1-3 produce."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    split: SplitIndices
    A_n: float
    mean: FittedMean
    variance: FittedVariance
    noise: EmpiricalDistribution
    replicates: ReplicateFits


async def fit_replicates(
    block3: Dataset,
    mean: FittedMean,
    var: FittedVariance,
    dist: EmpiricalDistribution,
    cfg: CiConfig,
    A_n: float,
    threads: Optional[int] = None,
) -> ReplicateFits:
    """
    Refit the mean on B + B_tilde replicate response vectors over I3.

    Only replicate B+1 also gets a variance network, fit on its squared
    replicate residuals. Every replicate draws from its own seed stream, so
    results do not depend on the number of worker threads.
    """
    settings = cfg.replicate_settings
    total = cfg.B + cfg.B_tilde
    mean_arch = settings.mean_arch(block3.d)

    def job(j: int):
        def run():
            y_tilde = make_bootstrap_responses(mean, var, block3, dist, j, cfg.rng_seed)
            replicate_data = block3.with_responses(y_tilde)
            try:
                fitted = fit_mean(
                    replicate_data, mean_arch,
                    settings.train.with_seed(derive_seed(cfg.rng_seed, f"replicate/{j}/mean")),
                    clip_bound=A_n,
                )
                fitted_var = None
                if j == cfg.B + 1:
                    fitted_var = fit_variance_residual(
                        fitted, replicate_data, settings.var_arch(block3.d),
                        settings.var_train.with_seed(derive_seed(cfg.rng_seed, f"replicate/{j}/variance")),
                        clip_bound=A_n,
                    )
            except TrainingDivergedError as e:
                raise e.for_replicate(j) from e
            return fitted, fitted_var
        return run

    results = await gather_bounded([job(j) for j in range(1, total + 1)], threads)
    logger.info(f"Fitted {total} bootstrap replicates on {block3.n} rows")
    return ReplicateFits(means=[r[0] for r in results], variance=results[cfg.B][1])


def _resolve_A_n(cfg: CiConfig, data: Dataset) -> float:
    if cfg.A_n is not None:
        return float(cfg.A_n)
    bound = float(np.max(np.abs(data.ys)))
    return bound if bound > 0 else 1.0


async def run_steps_one_to_three(
    cfg: CiConfig,
    data: Dataset,
    threads: Optional[int] = None,
) -> BootstrapState:
    """Split, fit the base mean/variance, build the noise law and fit replicates."""
    split = split_indices(data.n, derive_seed(cfg.rng_seed, "split"))
    blocks = [data.subset(block) for block in split.blocks()]
    A_n = _resolve_A_n(cfg, data)
    settings = cfg.fit

    with _stage("step1-mean"):
        mean = fit_mean(
            blocks[0], settings.mean_arch(data.d),
            settings.train.with_seed(derive_seed(cfg.rng_seed, "step1/mean")),
            clip_bound=A_n,
        )
    with _stage("step2-variance"):
        var = fit_variance_residual(
            mean, blocks[1], settings.var_arch(data.d),
            settings.var_train.with_seed(derive_seed(cfg.rng_seed, "step2/variance")),
            clip_bound=A_n,
        )
    with _stage("step3-noise"):
        dist = standardized_residuals(mean, var, blocks[1])
    with _stage("step3-replicates"):
        replicates = await fit_replicates(blocks[2], mean, var, dist, cfg, A_n, threads)
    return BootstrapState(split=split, A_n=A_n, mean=mean, variance=var, noise=dist, replicates=replicates)


def interval_from_state(cfg: CiConfig, data: Dataset, state: BootstrapState) -> CiResult:
    """Steps 4-6 given the output of Steps 1-3."""
    require(validate_alpha(cfg.alpha))
    block2 = data.subset(state.split.i2)
    block4 = data.subset(state.split.i4)
    replicate_b1 = state.replicates.means[cfg.B]

    with _stage("step4-quantile"):
        losses = replicate_losses(state.replicates.means[: cfg.B], block4)
        a1 = quantile_a1(losses, cfg.alpha, cfg.B_tilde)

    with _stage("step5-corrections"):
        sigma2 = None
        if cfg.a0_variant == "homoscedastic":
            sigma2 = fit_sigma2_homoscedastic(state.mean, block2).sigma2
        context = CiContext(
            n=data.n,
            A_n=state.A_n,
            B_tilde=cfg.B_tilde,
            log_power=cfg.log_power,
            ys=data.ys,
            y_i4=block4.ys,
            f_i4=predict_mean(replicate_b1, block4.xs),
            g_i4=predict_variance(state.replicates.variance, block4.xs),
            sigma2=sigma2,
        )
        a0 = compute_a0(cfg.a0_variant, context, cfg.alpha)
        b_alpha = compute_b_alpha(cfg.b_variant, context, cfg.alpha)
        a_alpha = compute_a_alpha(a1, a0, context, cfg.alpha)
        a2, a3 = deviation_terms(state.A_n, data.n, cfg.alpha, cfg.B_tilde)

    delta = compute_delta(a_alpha, b_alpha, cfg.alpha, cfg.B_tilde)
    logger.info(
        f"Delta(alpha={cfg.alpha}) = {delta:.6g} (a1={a1:.4g}, a0={a0:.4g}, "
        f"a={a_alpha:.4g}, b={b_alpha:.4g})"
    )
    return CiResult(
        alpha=cfg.alpha,
        B=cfg.B,
        B_tilde=cfg.B_tilde,
        A_n=state.A_n,
        a0_variant=cfg.a0_variant,
        b_variant=cfg.b_variant,
        half_width=delta,
        diagnostics=CiDiagnostics(
            n=data.n, a1=a1, a2_term=a2, a3_term=a3, mean_g=context.mean_g,
            a0=a0, a_alpha=a_alpha, b_alpha=b_alpha,
        ),
        center_members=state.replicates.means[cfg.B: cfg.B + cfg.B_tilde],
    )


async def build_interval(cfg: CiConfig, data: Dataset, threads: Optional[int] = None) -> CiResult:
    """
    Robust bootstrap interval end to end.

    Args:
        cfg: Interval configuration
        data: Full sample
        threads: Worker threads for replicate fits (default RELUBOOT_THREADS)

    Returns:
        CiResult with the center ensemble and Delta(alpha)
    """
    state = await run_steps_one_to_three(cfg, data, threads)
    return interval_from_state(cfg, data, state)


def evaluate_center(result: CiResult, xs: np.ndarray) -> np.ndarray:
    """Average of the clipped replicate means B+1..B+B_tilde."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    total = np.zeros(xs.shape[0])
    for member in result.center_members:
        total += predict_mean(member, xs)
    return total / len(result.center_members)


def ci_interval(result: CiResult, xs: np.ndarray) -> Interval:
    """center(x) +/- Delta(alpha)."""
    center = evaluate_center(result, xs)
    return Interval(lower=center - result.half_width, upper=center + result.half_width)


def ci_record(result: CiResult, xs: Optional[np.ndarray] = None) -> Dict:
    """Flat record of a CiResult, with center evaluations when xs is given."""
    d = result.diagnostics
    record = {
        "alpha": result.alpha,
        "B": result.B,
        "B_tilde": result.B_tilde,
        "A_n": result.A_n,
        "a1": d.a1,
        "a0": d.a0,
        "b_alpha": d.b_alpha,
        "a_alpha": d.a_alpha,
        "delta": result.half_width,
        "a2_term": d.a2_term,
        "a3_term": d.a3_term,
        "mean_g": d.mean_g,
        "n": d.n,
    }
    if xs is not None:
        record["center"] = [float(v) for v in evaluate_center(result, xs)]
    return record


def replicate_predictions(state: BootstrapState, xs: np.ndarray) -> np.ndarray:
    """Clipped predictions of every replicate, one row per replicate."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    return np.vstack([predict_mean(m, xs) for m in state.replicates.means])


async def naive_bootstrap_interval(
    cfg: CiConfig,
    data: Dataset,
    x_new: np.ndarray,
    threads: Optional[int] = None,
    state: Optional[BootstrapState] = None,
) -> Interval:
    """Empirical (alpha/2, 1 - alpha/2) quantiles of the Step-3 replicate means."""
    if state is None:
        state = await run_steps_one_to_three(cfg, data, threads)
    return quantile_interval(replicate_predictions(state, x_new), cfg.alpha)


async def standard_bootstrap_interval(
    cfg: CiConfig,
    data: Dataset,
    x_new: np.ndarray,
    threads: Optional[int] = None,
) -> Interval:
    """
    Pairs bootstrap: resample (x_i, y_i) with replacement, refit an unclipped
    mean network, take pointwise quantiles of the predictions.
    """
    x_new = np.atleast_2d(np.asarray(x_new, dtype=np.float64))
    resamples = cfg.standard_resamples or (cfg.B + cfg.B_tilde)
    settings = cfg.fit
    arch = settings.mean_arch(data.d)

    def job(r: int):
        def run():
            picks = make_rng(derive_seed(cfg.rng_seed, f"standard/{r}/resample")).integers(0, data.n, size=data.n)
            try:
                fitted = fit_mean(
                    data.subset(picks), arch,
                    settings.train.with_seed(derive_seed(cfg.rng_seed, f"standard/{r}/mean")),
                )
            except TrainingDivergedError as e:
                raise e.for_replicate(r) from e
            return predict(fitted.net, x_new)
        return run

    with _stage("standard-bootstrap"):
        predictions = await gather_bounded([job(r) for r in range(1, resamples + 1)], threads)
    return quantile_interval(np.vstack(predictions), cfg.alpha)
