"""Feed-forward regressor with hand-derived backpropagation.

The topology is fixed: affine -> ReLU -> affine -> ReLU -> affine -> sigmoid.
Weights are stored as (fan_in, fan_out) matrices and inputs are batch-major,
so a layer computes ``a @ W + b``.
"""
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from flmrsim.errors import ShapeError
from flmrsim.models.config import MLPConfig

# Bound on the output pre-activation; keeps sigmoid strictly inside (0, 1) in float64.
_LOGIT_CLIP = 36.0

Layer = tuple[np.ndarray, np.ndarray]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True, order="C")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class ModelParams:
    """Weights and biases of every layer, input side first."""

    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        previous_out = None
        for index, (weight, bias) in enumerate(self.layers):
            if weight.ndim != 2 or bias.shape != (weight.shape[1],):
                raise ShapeError(f"layer {index}: weight {weight.shape} and bias {bias.shape}")
            if previous_out is not None and weight.shape[0] != previous_out:
                raise ShapeError(
                    f"layer {index}: expects {weight.shape[0]} inputs, got {previous_out}"
                )
            previous_out = weight.shape[1]

    def __iter__(self) -> Iterator[Layer]:
        return iter(self.layers)

    @classmethod
    def from_arrays(cls, layers: list[Layer] | tuple[Layer, ...]) -> "ModelParams":
        """Copy arrays into an immutable parameter set."""
        return cls(tuple((_frozen(w), _frozen(b)) for w, b in layers))

    @property
    def shapes(self) -> tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]:
        return tuple((w.shape, b.shape) for w, b in self.layers)

    @property
    def input_dim(self) -> int:
        return int(self.layers[0][0].shape[0])

    def is_finite(self) -> bool:
        """True when no weight or bias is NaN or infinite."""
        return all(np.isfinite(w).all() and np.isfinite(b).all() for w, b in self.layers)


@dataclass(frozen=True)
class ParamGrads:
    """Loss derivatives with the same structure as ModelParams."""

    layers: tuple[Layer, ...]

    def __iter__(self) -> Iterator[Layer]:
        return iter(self.layers)


@dataclass(frozen=True)
class ForwardTrace:
    """Intermediates of one forward pass, needed by backward."""

    params: ModelParams
    inputs: np.ndarray
    pre_activations: tuple[np.ndarray, ...]
    activations: tuple[np.ndarray, ...]

    @property
    def batch_size(self) -> int:
        return int(self.inputs.shape[0])


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -_LOGIT_CLIP, _LOGIT_CLIP)))


def init_params(config: MLPConfig, seed: int) -> ModelParams:
    """Glorot-uniform weights and zero biases, deterministic in seed."""
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in config.layer_dims:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append((weight, np.zeros(fan_out)))
    return ModelParams.from_arrays(layers)


def _as_batch(features: np.ndarray, input_dim: int) -> np.ndarray:
    batch = np.asarray(features, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch.reshape(1, -1)
    if batch.ndim != 2 or batch.shape[1] != input_dim:
        raise ShapeError(f"expected features of width {input_dim}, got shape {batch.shape}")
    return batch


def forward(params: ModelParams, features: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
    """Predictions of shape (batch, output_dim) plus the trace for backward."""
    activation = _as_batch(features, params.input_dim)
    inputs = activation
    pre: list[np.ndarray] = []
    post: list[np.ndarray] = []
    last = len(params.layers) - 1
    for index, (weight, bias) in enumerate(params.layers):
        z = activation @ weight + bias
        activation = sigmoid(z) if index == last else relu(z)
        pre.append(z)
        post.append(activation)
    trace = ForwardTrace(params, inputs, tuple(pre), tuple(post))
    return activation, trace


def predict(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Flat prediction vector of a scalar-output model."""
    predictions, _ = forward(params, features)
    return predictions[:, 0]


def backward(params: ModelParams, trace: ForwardTrace, dloss_dpred: np.ndarray) -> ParamGrads:
    """Chain dLoss/dPrediction back to every weight and bias.

    ``dloss_dpred`` is the derivative of the already-reduced batch loss with
    respect to each prediction; per-sample contributions are summed here.
    """
    if trace.params is not params:
        raise ShapeError("forward trace was produced by a different parameter set")
    outputs = trace.activations[-1]
    delta = np.asarray(dloss_dpred, dtype=np.float64)
    if delta.ndim == 1:
        delta = delta.reshape(-1, 1)
    if delta.shape != outputs.shape:
        raise ShapeError(f"loss gradient shape {delta.shape} does not match {outputs.shape}")

    delta = delta * outputs * (1.0 - outputs)
    grads: list[Layer] = []
    for index in range(len(params.layers) - 1, -1, -1):
        weight, _ = params.layers[index]
        below = trace.activations[index - 1] if index > 0 else trace.inputs
        grads.append((below.T @ delta, delta.sum(axis=0)))
        if index > 0:
            delta = (delta @ weight.T) * (trace.pre_activations[index - 1] > 0.0)
    grads.reverse()
    return ParamGrads(tuple(grads))


def flatten(params: ModelParams | ParamGrads) -> np.ndarray:
    """Every parameter in one vector, layer by layer, weight before bias."""
    return np.concatenate([part.ravel() for layer in params.layers for part in layer])


def unflatten(vector: np.ndarray, like: ModelParams) -> ModelParams:
    """Inverse of flatten, shaped after ``like``."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.size != param_count(like):
        raise ShapeError(f"vector of {vector.size} values for {param_count(like)} parameters")
    layers = []
    offset = 0
    for weight, bias in like.layers:
        w = vector[offset : offset + weight.size].reshape(weight.shape)
        offset += weight.size
        b = vector[offset : offset + bias.size].reshape(bias.shape)
        offset += bias.size
        layers.append((w, b))
    return ModelParams.from_arrays(layers)


def param_count(params: ModelParams | ParamGrads) -> int:
    return sum(w.size + b.size for w, b in params.layers)


def global_norm(params: ModelParams) -> float:
    """Euclidean norm over all parameters."""
    return float(np.sqrt(sum(np.sum(w * w) + np.sum(b * b) for w, b in params.layers)))
