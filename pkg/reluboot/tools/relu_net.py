"""Dense ReLU networks: forward pass, backpropagation, Adam and training."""

import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from ..constants import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPSILON,
    GRADCHECK_MAX_DEPTH,
    GRADCHECK_MAX_WIDTH,
    GRADCHECK_STEP,
)
from ..models import AdamState, Network, NetworkArch, TrainConfig
from ..utils.validation import DimensionMismatchError, TrainingDivergedError, ValidationError

logger = logging.getLogger(__name__)

Params = List[np.ndarray]


def init_network(arch: NetworkArch, seed: int) -> Network:
    """
    Draw a network with He-style fan-in scaling.

    Weights are N(0, 2/fan_in); biases start at zero. The same (arch, seed)
    always yields the same parameters.

    Args:
        arch: Network architecture
        seed: Seed for the PCG64 generator

    Returns:
        Freshly initialized Network
    """
    rng = np.random.default_rng(seed)
    params: Params = []
    for shape in arch.parameter_shapes():
        if len(shape) == 2:
            fan_in = shape[1]
            params.append(rng.standard_normal(shape) * math.sqrt(2.0 / fan_in))
        else:
            params.append(np.zeros(shape))
    return Network.from_parameters(arch, params)


def clip(value: Union[float, np.ndarray], bound: float) -> Union[float, np.ndarray]:
    """Truncate value (scalar or array) to [-bound, bound]."""
    if bound <= 0:
        raise ValidationError(f"Clip bound must be positive, got {bound}")
    if np.ndim(value) == 0:
        return float(min(max(float(value), -bound), bound))
    return np.clip(value, -bound, bound)


def _check_inputs(arch: NetworkArch, xs: np.ndarray, ys: Optional[np.ndarray] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != arch.input_dim:
        raise DimensionMismatchError("covariates", f"(n, {arch.input_dim})", xs.shape)
    if ys is not None:
        ys = np.asarray(ys, dtype=np.float64).reshape(-1)
        if ys.shape[0] != xs.shape[0]:
            raise DimensionMismatchError("responses", xs.shape[0], ys.shape[0])
        if ys.shape[0] < 1:
            raise DimensionMismatchError("responses", ">= 1 rows", 0)
    return xs, ys


def _forward_pass(params: Params, xs: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
    """Return outputs plus pre-activations and layer inputs for backprop."""
    depth = (len(params) - 2) // 2
    activations = [xs]
    pre_activations = []
    h = xs
    for layer in range(depth):
        z = h @ params[2 * layer].T + params[2 * layer + 1]
        h = np.maximum(z, 0.0)
        pre_activations.append(z)
        activations.append(h)
    out = h @ params[-2][0] + params[-1][0]
    return out, pre_activations, activations


def _loss_and_grads(params: Params, xs: np.ndarray, ys: np.ndarray) -> Tuple[float, Params]:
    n = xs.shape[0]
    depth = (len(params) - 2) // 2
    out, pre_activations, activations = _forward_pass(params, xs)
    residual = ys - out
    loss = float(residual @ residual) / n

    grads: Params = [None] * len(params)
    d_out = -2.0 * residual / n
    grads[-2] = (d_out @ activations[-1]).reshape(1, -1)
    grads[-1] = np.array([d_out.sum()])

    d_h = np.outer(d_out, params[-2][0])
    for layer in range(depth - 1, -1, -1):
        # ReLU subgradient at exactly 0 is 0
        d_z = d_h * (pre_activations[layer] > 0.0)
        grads[2 * layer] = d_z.T @ activations[layer]
        grads[2 * layer + 1] = d_z.sum(axis=0)
        if layer > 0:
            d_h = d_z @ params[2 * layer]
    return loss, grads


def predict(net: Network, xs: np.ndarray) -> np.ndarray:
    """Evaluate the network on every row of an n x d matrix."""
    xs, _ = _check_inputs(net.arch, xs)
    out, _, _ = _forward_pass(net.parameters(), xs)
    return out


def forward(net: Network, x: Sequence[float]) -> float:
    """Evaluate the network at a single covariate vector of length d."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != net.arch.input_dim:
        raise DimensionMismatchError("forward input", net.arch.input_dim, x.shape)
    return float(predict(net, x.reshape(1, -1))[0])


def mse_loss(net: Network, xs: np.ndarray, ys: np.ndarray) -> float:
    """Mean squared residual (1/n) * sum (y_i - f(x_i))^2."""
    xs, ys = _check_inputs(net.arch, xs, ys)
    residual = ys - predict(net, xs)
    return float(residual @ residual) / ys.shape[0]


def backprop_grads(net: Network, xs: np.ndarray, ys: np.ndarray) -> Params:
    """Exact gradient of mse_loss with respect to every parameter, in storage order."""
    xs, ys = _check_inputs(net.arch, xs, ys)
    _, grads = _loss_and_grads(net.parameters(), xs, ys)
    return grads


def init_adam_state(
    net: Network,
    learning_rate: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    epsilon: float = ADAM_EPSILON,
) -> AdamState:
    """Adam state with zero moments shaped like the network parameters."""
    zeros = [np.zeros_like(p) for p in net.parameters()]
    return AdamState(
        step_count=0,
        first_moment=zeros,
        second_moment=[z.copy() for z in zeros],
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def _adam_update(
    params: Params,
    grads: Params,
    m: Params,
    v: Params,
    step: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
) -> None:
    """In-place bias-corrected Adam update; step is the post-increment count."""
    correction1 = 1.0 - beta1 ** step
    correction2 = 1.0 - beta2 ** step
    for p, g, m_i, v_i in zip(params, grads, m, v):
        m_i *= beta1
        m_i += (1.0 - beta1) * g
        v_i *= beta2
        v_i += (1.0 - beta2) * g * g
        p -= lr * (m_i / correction1) / (np.sqrt(v_i / correction2) + eps)


def adam_step(net: Network, grads: Params, state: AdamState) -> Tuple[Network, AdamState]:
    """
    Apply one Adam update and return new (network, state) objects.

    Neither input is modified.
    """
    params = [p.copy() for p in net.parameters()]
    if len(grads) != len(params) or any(np.shape(g) != p.shape for g, p in zip(grads, params)):
        raise DimensionMismatchError(
            "adam_step gradients", [p.shape for p in params], [np.shape(g) for g in grads]
        )
    m = [a.copy() for a in state.first_moment]
    v = [a.copy() for a in state.second_moment]
    step = state.step_count + 1
    _adam_update(
        params, [np.asarray(g, dtype=np.float64) for g in grads], m, v, step,
        state.learning_rate, state.beta1, state.beta2, state.epsilon,
    )
    new_state = state.model_copy(update={
        "step_count": step,
        "first_moment": m,
        "second_moment": v,
    })
    return Network.from_parameters(net.arch, params, train_loss=net.train_loss), new_state


def train(net: Network, xs: np.ndarray, ys: np.ndarray, cfg: TrainConfig) -> Network:
    """
    Run cfg.epochs of mini-batch Adam on the MSE objective.

    Batches are reshuffled every epoch from a generator seeded with
    cfg.rng_seed; batch_size >= n means full-batch updates.

    Args:
        net: Starting network (not modified)
        xs: n x d covariates
        ys: length-n targets
        cfg: Training configuration

    Returns:
        Trained network with train_loss set to the final training MSE

    Raises:
        TrainingDivergedError: if the loss becomes non-finite
    """
    xs, ys = _check_inputs(net.arch, xs, ys)
    if cfg.epochs == 0:
        return net

    n = ys.shape[0]
    batch_size = min(cfg.batch_size, n)
    rng = np.random.default_rng(cfg.rng_seed)
    params = [p.copy() for p in net.parameters()]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    step = 0

    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if batch_size < n else np.arange(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            loss, grads = _loss_and_grads(params, xs[batch], ys[batch])
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, loss)
            epoch_loss += loss * batch.shape[0]
            step += 1
            _adam_update(params, grads, m, v, step, cfg.learning_rate, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON)
        logger.debug(f"epoch {epoch}: mean batch loss {epoch_loss / n:.6g}")

    out, _, _ = _forward_pass(params, xs)
    final_loss = float(np.mean((ys - out) ** 2))
    if not math.isfinite(final_loss) or not all(np.all(np.isfinite(p)) for p in params):
        raise TrainingDivergedError(cfg.epochs - 1, final_loss)
    logger.debug(f"Trained {net.arch.depth}x{net.arch.width} network on {n} rows: final MSE {final_loss:.6g}")
    return Network.from_parameters(net.arch, params, train_loss=final_loss)


class GradcheckReport(BaseModel):
    """Outcome of comparing backprop against central finite differences."""

    arch: NetworkArch
    seed: int
    n_samples: int
    n_parameters: int
    max_rel_error: float = Field(..., ge=0)
    step: float = GRADCHECK_STEP


def _finite_difference(params: Params, xs: np.ndarray, ys: np.ndarray, h: float) -> Params:
    def loss_at(values: Params) -> float:
        out, _, _ = _forward_pass(values, xs)
        residual = ys - out
        return float(residual @ residual) / ys.shape[0]

    estimates: Params = []
    for p in params:
        estimate = np.zeros_like(p)
        flat = p.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + h
            upper = loss_at(params)
            flat[k] = original - h
            lower = loss_at(params)
            flat[k] = original
            estimate.reshape(-1)[k] = (upper - lower) / (2.0 * h)
        estimates.append(estimate)
    return estimates


def gradcheck(
    arch: NetworkArch,
    seed: int,
    n_samples: int,
    zero_loss: bool = False,
    step: float = GRADCHECK_STEP,
) -> GradcheckReport:
    """
    Compare backprop_grads with central finite differences on random data.

    The relative error of a coordinate is |bp - fd| / max(1, |fd|). Biases are
    drawn at random so that the check exercises every parameter block.

    Args:
        arch: Small architecture (width <= 8, depth <= 3)
        seed: Seed for network, data and bias draws
        n_samples: Number of random covariate rows
        zero_loss: Use the network's own outputs as targets (loss exactly 0)
        step: Finite-difference step h

    Returns:
        GradcheckReport with the maximum relative error
    """
    if arch.width > GRADCHECK_MAX_WIDTH or arch.depth > GRADCHECK_MAX_DEPTH:
        raise ValidationError(
            f"gradcheck is meant for small networks (width <= {GRADCHECK_MAX_WIDTH}, "
            f"depth <= {GRADCHECK_MAX_DEPTH}), got width={arch.width}, depth={arch.depth}"
        )
    rng = np.random.default_rng(seed)
    params = [p.copy() for p in init_network(arch, seed).parameters()]
    for p in params:
        if p.ndim == 1:
            p += rng.normal(0.0, 0.1, size=p.shape)
    xs = rng.uniform(0.0, 1.0, size=(n_samples, arch.input_dim))
    if zero_loss:
        ys, _, _ = _forward_pass(params, xs)
    else:
        ys = rng.standard_normal(n_samples)

    _, analytic = _loss_and_grads(params, xs, ys)
    numeric = _finite_difference(params, xs, ys, step)
    max_error = 0.0
    for a, f in zip(analytic, numeric):
        error = np.abs(a - f) / np.maximum(1.0, np.abs(f))
        max_error = max(max_error, float(error.max()))
    logger.info(f"gradcheck arch=({arch.input_dim},{arch.depth},{arch.width}) seed={seed}: max rel error {max_error:.3e}")
    return GradcheckReport(
        arch=arch,
        seed=seed,
        n_samples=n_samples,
        n_parameters=arch.parameter_count,
        max_rel_error=max_error,
        step=step,
    )


def theoretical_arch(
    n: int,
    input_dim: int,
    smoothness: Sequence[Tuple[float, int]],
    c3: float = 1.0,
    c4: float = 1.0,
    choice: int = 1,
) -> NetworkArch:
    """
    Depth/width scaling from the dense-ReLU rate result.

    With rho = max over (p, K) of n^(K / (2(2p + K))):
      choice 1: depth = ceil(c3 log n), width = ceil(c4 rho)
      choice 2: depth = ceil(c3 rho log n), width = ceil(c4)

    Args:
        n: Sample size
        input_dim: Covariate dimension d
        smoothness: (p, K) pairs of the hierarchical composition model
        c3, c4: Positive constants
        choice: 1 (deep-ish, wide) or 2 (deep, narrow)
    """
    if not smoothness:
        raise ValidationError("theoretical_arch needs at least one (p, K) smoothness pair")
    rho = max(n ** (K / (2.0 * (2.0 * p + K))) for p, K in smoothness)
    log_n = math.log(n)
    if choice == 1:
        depth, width = math.ceil(c3 * log_n), math.ceil(c4 * rho)
    elif choice == 2:
        depth, width = math.ceil(c3 * rho * log_n), math.ceil(c4)
    else:
        raise ValidationError(f"choice must be 1 or 2, got {choice}")
    return NetworkArch(input_dim=input_dim, depth=max(depth, 1), width=max(width, 1))
