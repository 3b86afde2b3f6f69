"""Pydantic models for datasets, splits and fitted estimators."""

from typing import Callable, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .network import Network

_UNIT_TOLERANCE = 1e-12


def _as_float_array(value, ndim: int) -> np.ndarray:
    array = np.array(value, dtype=np.float64, copy=True)
    if ndim == 2 and array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != ndim:
        raise ValueError(f"Expected a {ndim}-dimensional array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class Dataset(BaseModel):
    """Covariates in [0,1]^d with real responses."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    xs: np.ndarray = Field(..., description="n x d covariate matrix with entries in [0,1]")
    ys: np.ndarray = Field(..., description="Length-n response vector")

    @field_validator("xs", mode="before")
    @classmethod
    def coerce_xs(cls, v):
        return _as_float_array(v, 2)

    @field_validator("ys", mode="before")
    @classmethod
    def coerce_ys(cls, v):
        return _as_float_array(v, 1)

    @model_validator(mode="after")
    def check_contents(self):
        if self.xs.shape[0] < 1:
            raise ValueError("Dataset needs at least one observation")
        if self.xs.shape[0] != self.ys.shape[0]:
            raise ValueError(f"xs has {self.xs.shape[0]} rows but ys has {self.ys.shape[0]} entries")
        if not np.all(np.isfinite(self.ys)) or not np.all(np.isfinite(self.xs)):
            raise ValueError("Dataset values must be finite")
        if self.xs.min() < -_UNIT_TOLERANCE or self.xs.max() > 1.0 + _UNIT_TOLERANCE:
            raise ValueError("Covariates must lie in [0,1]; min-max scale them first")
        return self

    @property
    def n(self) -> int:
        return int(self.xs.shape[0])

    @property
    def d(self) -> int:
        return int(self.xs.shape[1])

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(xs=self.xs[idx], ys=self.ys[idx])

    def with_responses(self, ys: np.ndarray) -> "Dataset":
        return Dataset(xs=self.xs, ys=ys)


class SplitIndices(BaseModel):
    """Disjoint partition of {0..n-1} into the four blocks I1..I4."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)
    i1: List[int]
    i2: List[int]
    i3: List[int]
    i4: List[int]

    @model_validator(mode="after")
    def check_partition(self):
        blocks = self.blocks()
        combined = [i for block in blocks for i in block]
        if sorted(combined) != list(range(self.n)):
            raise ValueError("Blocks must be disjoint and cover every index exactly once")
        sizes = [len(block) for block in blocks]
        if max(sizes) - min(sizes) > 1:
            raise ValueError(f"Block sizes {sizes} are unbalanced")
        return self

    def blocks(self) -> List[List[int]]:
        return [self.i1, self.i2, self.i3, self.i4]


class EmpiricalDistribution(BaseModel):
    """Finite multiset of atoms, sampled uniformly with replacement."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    atoms: np.ndarray = Field(..., description="Standardized residuals")

    @field_validator("atoms", mode="before")
    @classmethod
    def coerce_atoms(cls, v):
        atoms = _as_float_array(v, 1)
        if atoms.size == 0:
            raise ValueError("An empirical distribution needs at least one atom")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("Atoms must be finite")
        return atoms

    def cdf(self, t: float) -> float:
        """Proper empirical CDF: fraction of atoms <= t."""
        return float(np.count_nonzero(self.atoms <= t)) / self.atoms.size


class FittedMean(BaseModel):
    """Mean network together with its clipping bound A."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    net: Network
    clip_bound: float = Field(..., gt=0, description="Clip bound A for mean predictions")


class FittedVariance(BaseModel):
    """One of the three conditional-variance estimators.

    residual      -> net fit on squared residuals, clipped at clip_bound
    direct        -> net (h-hat) fit on squared responses minus clipped mean squared
    homoscedastic -> constant sigma2 in [0, clip_bound]
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["residual", "direct", "homoscedastic"]
    clip_bound: float = Field(..., gt=0)
    net: Optional[Network] = None
    mean: Optional[FittedMean] = Field(None, description="Mean fit used by the direct estimator")
    sigma2: Optional[float] = None

    @model_validator(mode="after")
    def check_kind_payload(self):
        if self.kind == "homoscedastic":
            if self.sigma2 is None or not 0.0 <= self.sigma2 <= self.clip_bound:
                raise ValueError("Homoscedastic estimate must lie in [0, clip_bound]")
        elif self.net is None:
            raise ValueError(f"A {self.kind} variance estimator needs a network")
        if self.kind == "direct" and self.mean is None:
            raise ValueError("The direct estimator needs the fitted mean")
        return self


class ScenarioSpec(BaseModel):
    """Synthetic data-generating process y = f*(x) + sqrt(g*(x)) * eps."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: int = Field(..., ge=1, le=5)
    dim: int = Field(..., ge=1)
    f_star: Callable[[np.ndarray], np.ndarray] = Field(..., description="Vectorized mean over rows")
    g_star: Callable[[np.ndarray], np.ndarray] = Field(..., description="Vectorized variance over rows")
    noise_law: Literal["normal", "uniform"]
    description: str = ""


class SyntheticSample(BaseModel):
    """A drawn dataset with the true function values and the noise used."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    scenario: int
    seed: int
    dataset: Dataset
    f_values: np.ndarray
    g_values: np.ndarray
    noise: np.ndarray


class ScalingParams(BaseModel):
    """Per-column min-max parameters; constant columns are flagged and mapped to 0."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mins: np.ndarray
    maxs: np.ndarray
    constant: List[bool]


class TabularDataset(BaseModel):
    """Ingested table: real feature columns, real target, provenance."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    features: np.ndarray
    target: np.ndarray
    feature_names: List[str]
    target_name: str
    source: str = Field("", description="Where the rows came from")
    log_target: bool = Field(False, description="Whether the target was log-transformed")
    scaling: Optional[ScalingParams] = None

    @field_validator("features", mode="before")
    @classmethod
    def coerce_features(cls, v):
        return _as_float_array(v, 2)

    @field_validator("target", mode="before")
    @classmethod
    def coerce_target(cls, v):
        return _as_float_array(v, 1)

    @property
    def n(self) -> int:
        return int(self.target.shape[0])

    def to_dataset(self) -> Dataset:
        """Covariates must already be scaled into [0,1]."""
        return Dataset(xs=self.features, ys=self.target)
