"""Synthetic data-generating processes y = f*(x) + sqrt(g*(x)) * eps on [0,1]^d."""

import logging
import math
from typing import Callable, Dict, Sequence

import numpy as np

from ..constants import ERROR_MESSAGES
from ..models import Dataset, ScenarioSpec, SyntheticSample
from ..utils.seeding import derive_seed, make_rng
from ..utils.validation import DimensionMismatchError, ValidationError

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)


def _compose(h1: Callable, h2: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """h2 o h1 over the rows of a matrix; h1 returns a tuple of columns."""
    def f(xs: np.ndarray) -> np.ndarray:
        return h2(*h1(xs))
    return f


# Scenario 1

def _s1_h1(q):
    return np.sqrt(q[:, 0]) + q[:, 0] * q[:, 1], np.cos(2.0 * np.pi * q[:, 1])


def _s1_h2(u, v):
    return np.sqrt(u + v ** 2) + u ** 2 * v


def _s1_g(q):
    return np.linalg.norm(q - np.array([0.5, 0.5]), axis=1)


# Scenario 2

def _s2_h1(q):
    return np.log1p(q[:, 0] ** 2) + q[:, 0] * q[:, 1], np.sin(3.0 * np.pi * q[:, 1]) * np.exp(-q[:, 0])


def _s2_h2(u, v):
    return np.cbrt(u ** 2 + v ** 2) + u ** 2 / (1.0 + np.abs(v))


def _s2_g(q):
    return np.linalg.norm(q - np.array([0.25, 0.75]), axis=1)


# Scenario 3 (tan has no pole on [0,1])

def _s3_h1(q):
    return np.tan(q[:, 0]) + q[:, 0] ** 2 * q[:, 1] ** 2, q[:, 1] ** 3 - 2.0 * q[:, 0]


def _s3_h2(u, v):
    return u * np.sin(v) + np.sqrt(np.abs(u - v)) + 1.0 / (1.0 + u ** 2)


def _s3_g(q):
    return np.exp(-np.abs(q[:, 0]) - np.abs(q[:, 1] - 1.0))


# Scenario 4

_S4_SHIFT = np.array([-0.5, 0.5, -0.5, 0.5, -0.5])


def _s4_h1(q):
    first = np.sin(q[:, 0]) * q[:, 1] ** 2 + np.exp(q[:, 2]) - q[:, 3] * q[:, 4]
    second = np.cos(q[:, 1]) + q[:, 2] * np.tanh(q[:, 3]) + q[:, 4] ** 3
    return first, second


def _s4_h2(u, v):
    return (u + v) ** 2 + np.sqrt(np.abs(u * v))


def _s4_g(q):
    shifted = q - _S4_SHIFT
    return np.exp(-np.linalg.norm(shifted, axis=1)) + np.sqrt(np.abs(shifted).sum(axis=1) + 1.0)


# Scenario 5

def _s5_h1(q):
    head, tail = q[:, :4], q[:, 4:]
    return (head ** 2).sum(axis=1) + tail.sum(axis=1), head.sum(axis=1) + (tail ** 2).sum(axis=1)


def _s5_h2(u, v):
    return u + v + u * v


def _s5_g(q):
    centered = q - 0.5
    return np.linalg.norm(centered, axis=1) + np.sqrt(np.abs(centered).sum(axis=1))


SCENARIOS: Dict[int, ScenarioSpec] = {
    1: ScenarioSpec(
        id=1, dim=2, f_star=_compose(_s1_h1, _s1_h2), g_star=_s1_g, noise_law="normal",
        description="sqrt/cos composition, g = distance to (1/2, 1/2)",
    ),
    2: ScenarioSpec(
        id=2, dim=2, f_star=_compose(_s2_h1, _s2_h2), g_star=_s2_g, noise_law="normal",
        description="log/sin composition, g = distance to (1/4, 3/4)",
    ),
    3: ScenarioSpec(
        id=3, dim=2, f_star=_compose(_s3_h1, _s3_h2), g_star=_s3_g, noise_law="normal",
        description="tan/sin composition, g = exp(-|q1| - |q2 - 1|)",
    ),
    4: ScenarioSpec(
        id=4, dim=5, f_star=_compose(_s4_h1, _s4_h2), g_star=_s4_g, noise_law="uniform",
        description="five covariates, uniform noise",
    ),
    5: ScenarioSpec(
        id=5, dim=10, f_star=_compose(_s5_h1, _s5_h2), g_star=_s5_g, noise_law="uniform",
        description="ten covariates, quadratic-sum composition, uniform noise",
    ),
}


def get_scenario(scenario_id: int) -> ScenarioSpec:
    try:
        return SCENARIOS[int(scenario_id)]
    except (KeyError, ValueError, TypeError):
        raise ValidationError(ERROR_MESSAGES["unknown_scenario"].format(scenario=scenario_id))


def _rows(spec: ScenarioSpec, x) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if xs.shape[1] != spec.dim:
        raise DimensionMismatchError(f"scenario {spec.id}", spec.dim, xs.shape[1])
    return xs


def f_star_values(spec: ScenarioSpec, xs: np.ndarray) -> np.ndarray:
    """f* on every row of xs."""
    return spec.f_star(_rows(spec, xs))


def g_star_values(spec: ScenarioSpec, xs: np.ndarray) -> np.ndarray:
    """g* on every row of xs."""
    return spec.g_star(_rows(spec, xs))


def eval_f_star(spec: ScenarioSpec, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError("eval_f_star", "a single point", x.shape)
    return float(f_star_values(spec, x)[0])


def eval_g_star(spec: ScenarioSpec, x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError("eval_g_star", "a single point", x.shape)
    return float(g_star_values(spec, x)[0])


def sample_noise_law(law: str, count: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance noise: N(0,1) or Uniform(-sqrt 3, sqrt 3)."""
    if law == "normal":
        return rng.standard_normal(count)
    if law == "uniform":
        return rng.uniform(-SQRT3, SQRT3, size=count)
    raise ValidationError(ERROR_MESSAGES["invalid_variant"].format(
        what="noise law", value=law, allowed="normal, uniform"
    ))


def sample_covariates(spec: ScenarioSpec, n: int, seed: int) -> np.ndarray:
    """n i.i.d. uniform points on [0,1]^d."""
    return make_rng(derive_seed(seed, "covariates")).random((n, spec.dim))


def sample_dataset(spec: ScenarioSpec, n: int, seed: int) -> SyntheticSample:
    """
    Draw n observations of a scenario.

    Covariates and noise come from separate streams of the seed, so the
    same seed always reproduces the same sample.
    """
    if n < 1:
        raise ValidationError(f"Sample size must be at least 1, got {n}")
    xs = sample_covariates(spec, n, seed)
    noise = sample_noise_law(spec.noise_law, n, make_rng(derive_seed(seed, "noise")))
    f_values = spec.f_star(xs)
    g_values = spec.g_star(xs)
    ys = f_values + np.sqrt(g_values) * noise
    logger.debug(f"Scenario {spec.id}: drew {n} rows (seed {seed})")
    return SyntheticSample(
        scenario=spec.id,
        seed=seed,
        dataset=Dataset(xs=xs, ys=ys),
        f_values=f_values,
        g_values=g_values,
        noise=noise,
    )
