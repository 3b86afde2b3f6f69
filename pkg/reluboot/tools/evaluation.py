"""Experiment protocols: variance-MSE benchmark, interval coverage and the real-data study."""

import logging
from typing import Awaitable, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..constants import CSV_COLUMNS, DEFAULT_ALPHA, ERROR_MESSAGES, PI_METHODS, VARIANCE_FLOOR
from ..models import (
    CiConfig,
    CoverageReport,
    Dataset,
    FitSettings,
    FittedMean,
    Interval,
    RealDataReport,
    ScenarioSpec,
    TabularDataset,
    TrialReport,
)
from ..models.results import mean_std
from ..utils.concurrency import gather_bounded
from ..utils.seeding import derive_seed, make_rng
from ..utils.validation import StageError, ValidationError, require, validate_alpha, validate_strategy
from .bootstrap_ci import (
    build_interval,
    ci_interval,
    ci_record,
    interval_from_state,
    naive_bootstrap_interval,
    order_statistic_quantile,
    run_steps_one_to_three,
    standard_bootstrap_interval,
)
from .scenarios import sample_covariates, sample_dataset
from .variance_estimators import (
    VarianceLike,
    estimate_variance,
    fit_mean,
    fit_variance_direct,
    fit_variance_residual,
    predict_mean,
    predict_variance,
    variance_mse,
)

logger = logging.getLogger(__name__)

MeanLike = Union[FittedMean, Callable[[np.ndarray], np.ndarray]]
EstimatorFn = Callable[[Dataset, str, FitSettings, int], VarianceLike]
IntervalFn = Callable[[CiConfig, Dataset, np.ndarray, Optional[int]], Awaitable[Interval]]

aggregate = mean_std


def _nn_estimator(kind: str) -> EstimatorFn:
    def fit(data: Dataset, strategy: str, settings: FitSettings, seed: int) -> VarianceLike:
        return estimate_variance(data, kind, strategy, settings, seed)
    return fit


# Variance estimators compared by the benchmark, by name
VARIANCE_ESTIMATORS: Dict[str, EstimatorFn] = {
    "residual": _nn_estimator("residual"),
    "direct": _nn_estimator("direct"),
    "homoscedastic": _nn_estimator("homoscedastic"),
}


def _lookup(registry: Dict, name: str):
    if name not in registry:
        raise ValidationError(ERROR_MESSAGES["unknown_estimator"].format(
            name=name, available=", ".join(sorted(registry))
        ))
    return registry[name]


async def run_variance_benchmark(
    spec: ScenarioSpec,
    n: int,
    trials: int,
    strategy: str,
    estimators: Sequence[str],
    seed: int,
    settings: Optional[FitSettings] = None,
    threads: Optional[int] = None,
) -> Dict[str, TrialReport]:
    """
    Repeat: draw a dataset, fit each estimator, score (1/n) sum (g_hat - g*)^2
    on the drawn covariates.

    Args:
        spec: Scenario to sample
        n: Sample size per trial
        trials: Number of independent datasets
        strategy: "full" or "split"
        estimators: Names registered in VARIANCE_ESTIMATORS
        seed: Master seed
        settings: Network settings (defaults to FitSettings())
        threads: Worker threads for concurrent trials

    Returns:
        One TrialReport per estimator, keyed by name
    """
    if trials < 1:
        raise ValidationError(f"trials must be at least 1, got {trials}")
    require(validate_strategy(strategy))
    fitters = {name: _lookup(VARIANCE_ESTIMATORS, name) for name in estimators}
    settings = settings or FitSettings()

    def job(t: int):
        def run() -> Dict[str, float]:
            sample = sample_dataset(spec, n, derive_seed(seed, f"trial/{t}/data"))
            scores = {}
            for name, fitter in fitters.items():
                try:
                    est = fitter(sample.dataset, strategy, settings, derive_seed(seed, f"trial/{t}/{name}"))
                    scores[name] = variance_mse(est, sample.dataset.xs, sample.g_values)
                except Exception as e:
                    raise StageError(f"trial {t} ({name})", e) from e
            logger.info(f"Scenario {spec.id} trial {t}: " + ", ".join(f"{k}={v:.4g}" for k, v in scores.items()))
            return scores
        return run

    per_trial = await gather_bounded([job(t) for t in range(1, trials + 1)], threads)
    return {
        name: TrialReport.from_values(spec.id, n, strategy, name, [scores[name] for scores in per_trial])
        for name in fitters
    }


def variance_rows(reports: Dict[str, TrialReport]) -> List[Dict]:
    """CSV rows (one per trial, then mean and std rows) for a benchmark."""
    rows = []
    for name, report in reports.items():
        base = {"scenario": report.scenario, "n": report.n, "method": name, "strategy": report.strategy}
        for t, mse in enumerate(report.mses, start=1):
            rows.append({**base, "trial": t, "mse": mse})
        rows.append({**base, "trial": "mean", "mse": report.mean})
        rows.append({**base, "trial": "std", "mse": report.std})
    return rows


def _variant_config(ci: CiConfig, a0_variant: str, b_variant: str) -> CiConfig:
    return ci.model_copy(update={"a0_variant": a0_variant, "b_variant": b_variant})


def _robust(a0_variant: str, b_variant: str) -> IntervalFn:
    async def build(cfg: CiConfig, data: Dataset, x_new: np.ndarray, threads: Optional[int] = None) -> Interval:
        result = await build_interval(_variant_config(cfg, a0_variant, b_variant), data, threads)
        return ci_interval(result, x_new).model_copy(update={"details": ci_record(result)})
    return build


# (a0 variant, b(alpha) variant) of each robust interval method
ROBUST_VARIANTS = {
    "nn": ("theoretical", "theoretical"),
    "nn_emp": ("empirical", "empirical"),
    "nn_hom": ("homoscedastic", "empirical"),
}

# Confidence-interval constructions compared by the coverage experiment
INTERVAL_METHODS: Dict[str, IntervalFn] = {
    **{name: _robust(*variants) for name, variants in ROBUST_VARIANTS.items()},
    "naive": naive_bootstrap_interval,
    "standard": standard_bootstrap_interval,
}


def coverage_of(interval: Interval, truth: np.ndarray) -> float:
    """Fraction of points whose interval contains the true value."""
    return float(np.mean(interval.contains(np.asarray(truth, dtype=np.float64))))


def prange_of(interval: Interval, truth: np.ndarray) -> Optional[float]:
    """Mean interval length over the range of the truth; None when the truth is constant."""
    spread = float(np.max(truth) - np.min(truth))
    if spread <= 0.0:
        return None
    return float(np.mean(interval.width)) / spread


async def run_coverage_experiment(
    spec: ScenarioSpec,
    n: int,
    alpha: float,
    method: str,
    datasets: int,
    new_points: int,
    seed: int,
    ci: Optional[CiConfig] = None,
    threads: Optional[int] = None,
) -> CoverageReport:
    """
    Coverage of f* and PRange of one interval method.

    For every dataset, new covariates are drawn, the interval is built and
    the fraction containing f*(x) is recorded. PRange is the per-dataset
    ratio of mean length to the range of f* over the new covariates,
    averaged over datasets.
    """
    require(validate_alpha(alpha))
    if datasets < 1 or new_points < 1:
        raise ValidationError(f"datasets and new_points must be positive, got {datasets} and {new_points}")
    builder = _lookup(INTERVAL_METHODS, method)
    ci = ci or CiConfig()

    coverages: List[float] = []
    pranges: List[float] = []
    half_widths: List[float] = []
    diagnostics: List[Dict] = []
    degenerate = False
    for k in range(1, datasets + 1):
        sample = sample_dataset(spec, n, derive_seed(seed, f"dataset/{k}/data"))
        x_new = sample_covariates(spec, new_points, derive_seed(seed, f"dataset/{k}/new"))
        truth = spec.f_star(x_new)
        cfg = ci.model_copy(update={"alpha": alpha, "rng_seed": derive_seed(seed, f"dataset/{k}/fit")})
        try:
            interval = await builder(cfg, sample.dataset, x_new, threads)
        except StageError:
            raise
        except Exception as e:
            raise StageError(f"dataset {k} ({method})", e) from e

        coverages.append(coverage_of(interval, truth))
        if interval.details is not None:
            diagnostics.append({"dataset": k, **interval.details})
        half_widths.append(float(np.mean(interval.width)) / 2.0)
        ratio = prange_of(interval, truth)
        if ratio is None:
            logger.warning(ERROR_MESSAGES["degenerate_range"].format(dataset=k))
            degenerate = True
            pranges.append(float("nan"))
        else:
            pranges.append(ratio)
        logger.info(f"Scenario {spec.id} dataset {k} [{method}]: coverage {coverages[-1]:.3f}, PRange {pranges[-1]:.4g}")

    finite = [p for p in pranges if np.isfinite(p)]
    return CoverageReport(
        scenario=spec.id,
        n=n,
        alpha=alpha,
        method=method,
        coverage=float(np.mean(coverages)),
        prange=float(np.mean(finite)) if finite else 0.0,
        per_dataset_coverage=coverages,
        per_dataset_prange=pranges,
        mean_half_width=float(np.mean(half_widths)),
        degenerate=degenerate,
        diagnostics=diagnostics,
    )


def coverage_rows(report: CoverageReport) -> List[Dict]:
    """CSV rows (one per dataset, then the aggregate row)."""
    base = {"scenario": report.scenario, "n": report.n, "alpha": report.alpha, "method": report.method}
    rows = [
        {**base, "dataset": k, "coverage": cov, "prange": pr}
        for k, (cov, pr) in enumerate(zip(report.per_dataset_coverage, report.per_dataset_prange), start=1)
    ]
    rows.append({**base, "dataset": "mean", "coverage": report.coverage, "prange": report.prange})
    return rows


def _mean_values(mean: MeanLike, xs: np.ndarray) -> np.ndarray:
    if isinstance(mean, FittedMean):
        return predict_mean(mean, xs)
    return np.asarray(mean(xs), dtype=np.float64)


def prediction_interval(
    mean: MeanLike,
    var: VarianceLike,
    train: Dataset,
    x_test: np.ndarray,
    alpha: float,
) -> Interval:
    """
    Plug-in prediction interval from standardized training residuals.

    q_lo and q_hi are the alpha/2 and 1 - alpha/2 order-statistic quantiles
    of (y_i - f(x_i)) / sqrt(g(x_i)) on the training rows; the interval is
    [f(x) + q_lo sqrt(g(x)), f(x) + q_hi sqrt(g(x))] with g floored at tau.
    """
    require(validate_alpha(alpha))
    x_test = np.atleast_2d(np.asarray(x_test, dtype=np.float64))
    train_scale = np.sqrt(np.maximum(predict_variance(var, train.xs), VARIANCE_FLOOR))
    standardized = (train.ys - _mean_values(mean, train.xs)) / train_scale
    q_lo = order_statistic_quantile(standardized, alpha / 2.0)
    q_hi = order_statistic_quantile(standardized, 1.0 - alpha / 2.0)

    center = _mean_values(mean, x_test)
    scale = np.sqrt(np.maximum(predict_variance(var, x_test), VARIANCE_FLOOR))
    return Interval(lower=center + q_lo * scale, upper=center + q_hi * scale)


def _nn_pi(kind: str):
    def fit(train: Dataset, settings: FitSettings, seed: int) -> Tuple[FittedMean, VarianceLike]:
        mean = fit_mean(train, settings.mean_arch(train.d), settings.train.with_seed(derive_seed(seed, "mean")))
        var_cfg = settings.var_train.with_seed(derive_seed(seed, "variance"))
        fitter = fit_variance_residual if kind == "residual" else fit_variance_direct
        return mean, fitter(mean, train, settings.var_arch(train.d), var_cfg)
    return fit


# Mean/variance pipelines behind the prediction intervals
PI_FITTERS: Dict[str, Callable[[Dataset, FitSettings, int], Tuple[MeanLike, VarianceLike]]] = {
    "nn_res": _nn_pi("residual"),
    "nn_dir": _nn_pi("direct"),
}


def train_test_split(n: int, train_size: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Random permutation cut into train_size training rows and the rest."""
    if not 1 <= train_size < n:
        raise ValidationError(f"train_size must lie in [1, {n - 1}], got {train_size}")
    order = make_rng(seed).permutation(n)
    return np.sort(order[:train_size]), np.sort(order[train_size:])


async def run_real_data_study(
    dataset: TabularDataset,
    train_size: int,
    splits: int,
    alphas: Sequence[float] = (0.05, DEFAULT_ALPHA),
    seed: int = 0,
    methods: Sequence[str] = PI_METHODS,
    ci_methods: Sequence[str] = ("nn", "nn_emp", "naive", "standard"),
    fit: Optional[FitSettings] = None,
    ci: Optional[CiConfig] = None,
    threads: Optional[int] = None,
) -> RealDataReport:
    """
    Random train/test splits of a scaled table.

    For every split: prediction-interval coverage on the test rows for each
    PI method and alpha, and the average confidence-interval length over the
    test covariates for each CI method and alpha. The robust and naive
    intervals share one run of Steps 1-3 per split.
    """
    for alpha in alphas:
        require(validate_alpha(alpha))
    if splits < 1:
        raise ValidationError(f"splits must be at least 1, got {splits}")
    fitters = {name: _lookup(PI_FITTERS, name) for name in methods}
    for name in ci_methods:
        _lookup(INTERVAL_METHODS, name)
    fit = fit or FitSettings()
    ci = ci or CiConfig(fit=fit)
    data = dataset.to_dataset()

    pi_records: List[Dict] = []
    ci_records: List[Dict] = []
    for s in range(1, splits + 1):
        train_idx, test_idx = train_test_split(data.n, train_size, derive_seed(seed, f"split/{s}/perm"))
        train, test = data.subset(train_idx), data.subset(test_idx)

        for name, fitter in fitters.items():
            try:
                mean, var = fitter(train, fit, derive_seed(seed, f"split/{s}/{name}"))
            except Exception as e:
                raise StageError(f"split {s} ({name})", e) from e
            for alpha in alphas:
                interval = prediction_interval(mean, var, train, test.xs, alpha)
                pi_records.append({"split": s, "method": name, "alpha": alpha, "coverage": coverage_of(interval, test.ys)})

        if ci_methods:
            ci_records.extend(await _split_ci_lengths(ci, train, test, alphas, ci_methods, derive_seed(seed, f"split/{s}/ci"), s, threads))
        logger.info(f"Real-data split {s}/{splits} done")

    return RealDataReport(
        train_size=train_size,
        splits=splits,
        alphas=list(alphas),
        pi_records=pi_records,
        ci_records=ci_records,
    )


async def _split_ci_lengths(
    ci: CiConfig,
    train: Dataset,
    test: Dataset,
    alphas: Sequence[float],
    ci_methods: Sequence[str],
    seed: int,
    split: int,
    threads: Optional[int],
) -> List[Dict]:
    records = []
    base_cfg = ci.model_copy(update={"rng_seed": seed})
    state = None
    if any(name in ROBUST_VARIANTS or name == "naive" for name in ci_methods):
        state = await run_steps_one_to_three(base_cfg, train, threads)
    for name in ci_methods:
        for alpha in alphas:
            cfg = base_cfg.model_copy(update={"alpha": alpha})
            if name in ROBUST_VARIANTS:
                a0_variant, b_variant = ROBUST_VARIANTS[name]
                result = interval_from_state(_variant_config(cfg, a0_variant, b_variant), train, state)
                length = 2.0 * result.half_width
            elif name == "naive":
                interval = await naive_bootstrap_interval(cfg, train, test.xs, threads, state=state)
                length = float(np.mean(interval.width))
            else:
                interval = await INTERVAL_METHODS[name](cfg, train, test.xs, threads)
                length = float(np.mean(interval.width))
            records.append({"split": split, "method": name, "alpha": alpha, "length": length})
    return records


def real_data_rows(report: RealDataReport) -> Tuple[List[Dict], List[Dict]]:
    """PI and CI rows in the fixed CSV column order."""
    pi_cols, ci_cols = CSV_COLUMNS["real_data_pi"], CSV_COLUMNS["real_data_ci"]
    return (
        [{c: r[c] for c in pi_cols} for r in report.pi_records],
        [{c: r[c] for c in ci_cols} for r in report.ci_records],
    )
