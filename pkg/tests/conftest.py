"""Pytest configuration and shared fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path so we can import reluboot modules
sys.path.insert(0, str(Path(__file__).parent.parent))

from reluboot.models import CiConfig, Dataset, FitSettings, Network, NetworkArch, TrainConfig  # noqa: E402


def constant_network(input_dim: int, value: float, width: int = 2) -> Network:
    """Network whose output is `value` everywhere (all weights zero)."""
    arch = NetworkArch(input_dim=input_dim, depth=1, width=width)
    params = [np.zeros(shape) for shape in arch.parameter_shapes()]
    params[-1] = np.array([value])
    return Network.from_parameters(arch, params)


@pytest.fixture
def make_constant_net():
    """Factory for constant-output networks."""
    return constant_network


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_settings():
    """Very small networks and few epochs, for pipeline plumbing tests."""
    train = TrainConfig(epochs=3, batch_size=32, learning_rate=1e-2)
    return FitSettings(depth=1, width=4, var_depth=1, var_width=4, train=train, var_train=train)


@pytest.fixture
def tiny_ci(tiny_settings):
    return CiConfig(alpha=0.1, B=4, B_tilde=2, fit=tiny_settings, standard_resamples=3, rng_seed=7)


@pytest.fixture
def linear_dataset(rng):
    """y = 2x + 1 + small noise on 200 points in [0,1]."""
    xs = rng.uniform(0.0, 1.0, size=(200, 1))
    ys = 2.0 * xs[:, 0] + 1.0 + 0.01 * rng.standard_normal(200)
    return Dataset(xs=xs, ys=ys)
