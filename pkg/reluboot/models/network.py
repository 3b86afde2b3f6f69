"""Pydantic models for dense ReLU networks and their training state."""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..constants import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPSILON,
    DEFAULT_BATCH_SIZE,
    DEFAULT_DEPTH,
    DEFAULT_EPOCHS,
    DEFAULT_LEARNING_RATE,
    DEFAULT_WIDTH,
)


def _frozen_array(value) -> np.ndarray:
    array = np.array(value, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


class NetworkArch(BaseModel):
    """Architecture of a dense ReLU network: L hidden layers of equal width."""

    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(..., ge=1, description="Covariate dimension d")
    depth: int = Field(DEFAULT_DEPTH, ge=1, description="Number of hidden layers L")
    width: int = Field(DEFAULT_WIDTH, ge=1, description="Neurons per hidden layer")

    def parameter_shapes(self) -> List[tuple]:
        """Shapes of W1, b1, ..., WL, bL, w_out, b_out in storage order."""
        shapes: List[tuple] = [(self.width, self.input_dim), (self.width,)]
        for _ in range(self.depth - 1):
            shapes.extend([(self.width, self.width), (self.width,)])
        shapes.extend([(1, self.width), (1,)])
        return shapes

    @property
    def parameter_count(self) -> int:
        return int(sum(np.prod(shape) for shape in self.parameter_shapes()))


class Network(BaseModel):
    """A dense ReLU network with read-only parameters."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    arch: NetworkArch
    layer_weights: List[np.ndarray] = Field(..., description="Hidden-layer weight matrices")
    layer_biases: List[np.ndarray] = Field(..., description="Hidden-layer bias vectors")
    output_weights: np.ndarray = Field(..., description="Output weight row, shape 1 x width")
    output_bias: float = Field(..., description="Output bias")
    train_loss: Optional[float] = Field(None, description="Training MSE after the last epoch")

    @field_validator("layer_weights", "layer_biases", mode="before")
    @classmethod
    def freeze_layers(cls, v):
        return [_frozen_array(item) for item in v]

    @field_validator("output_weights", mode="before")
    @classmethod
    def freeze_output(cls, v):
        return _frozen_array(v)

    @model_validator(mode="after")
    def check_shapes(self):
        """Parameter shapes must follow the architecture and values be finite."""
        expected = self.arch.parameter_shapes()
        actual = [p.shape for p in self.parameters()]
        if actual != expected:
            raise ValueError(f"Parameter shapes {actual} do not match architecture {expected}")
        if not all(np.all(np.isfinite(p)) for p in self.parameters()):
            raise ValueError("Network parameters must be finite")
        return self

    def parameters(self) -> List[np.ndarray]:
        """Parameters in storage order: W1, b1, ..., WL, bL, w_out, b_out."""
        params: List[np.ndarray] = []
        for weight, bias in zip(self.layer_weights, self.layer_biases):
            params.extend([weight, bias])
        params.extend([self.output_weights, np.array([self.output_bias])])
        return params

    @classmethod
    def from_parameters(
        cls,
        arch: NetworkArch,
        params: List[np.ndarray],
        train_loss: Optional[float] = None,
    ) -> "Network":
        """Rebuild a network from a flat parameter list (inverse of parameters())."""
        hidden = params[: 2 * arch.depth]
        return cls(
            arch=arch,
            layer_weights=hidden[0::2],
            layer_biases=hidden[1::2],
            output_weights=params[-2],
            output_bias=float(np.asarray(params[-1]).reshape(-1)[0]),
            train_loss=train_loss,
        )


class AdamState(BaseModel):
    """Moment estimates and hyperparameters of the Adam optimizer."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    step_count: int = Field(0, ge=0, description="Number of updates applied so far")
    first_moment: List[np.ndarray] = Field(..., description="Running mean of gradients")
    second_moment: List[np.ndarray] = Field(..., description="Running mean of squared gradients")
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, gt=0)
    beta1: float = Field(ADAM_BETA1, gt=0, lt=1)
    beta2: float = Field(ADAM_BETA2, gt=0, lt=1)
    epsilon: float = Field(ADAM_EPSILON, gt=0)

    @field_validator("first_moment", "second_moment", mode="before")
    @classmethod
    def freeze_moments(cls, v):
        return [_frozen_array(item) for item in v]


class TrainConfig(BaseModel):
    """Mini-batch Adam settings for one network fit."""

    model_config = ConfigDict(frozen=True)

    epochs: int = Field(DEFAULT_EPOCHS, ge=0, description="Passes over the training data")
    batch_size: int = Field(
        DEFAULT_BATCH_SIZE, ge=1,
        description="Mini-batch size; values >= n mean full-batch",
    )
    learning_rate: float = Field(DEFAULT_LEARNING_RATE, gt=0)
    rng_seed: int = Field(0, ge=0, lt=2**64, description="Seed for initialization-independent shuffling")

    def with_seed(self, seed: int) -> "TrainConfig":
        return self.model_copy(update={"rng_seed": seed})


class FitSettings(BaseModel):
    """Architectures and training settings for the mean and variance networks."""

    model_config = ConfigDict(frozen=True)

    depth: int = Field(DEFAULT_DEPTH, ge=1, description="Hidden layers of the mean network")
    width: int = Field(DEFAULT_WIDTH, ge=1, description="Width of the mean network")
    var_depth: int = Field(DEFAULT_DEPTH, ge=1, description="Hidden layers of the variance network")
    var_width: int = Field(DEFAULT_WIDTH, ge=1, description="Width of the variance network")
    train: TrainConfig = Field(default_factory=TrainConfig)
    var_train: TrainConfig = Field(default_factory=TrainConfig)

    def mean_arch(self, input_dim: int) -> NetworkArch:
        return NetworkArch(input_dim=input_dim, depth=self.depth, width=self.width)

    def var_arch(self, input_dim: int) -> NetworkArch:
        return NetworkArch(input_dim=input_dim, depth=self.var_depth, width=self.var_width)
