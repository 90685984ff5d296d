"""AdaDelta over ModelParams.

Per parameter, with decay rho and conditioning epsilon::

    E[g^2]  <- rho * E[g^2] + (1 - rho) * g^2
    delta   <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
    E[dx^2] <- rho * E[dx^2] + (1 - rho) * delta^2
    x       <- x + scale * delta

The accumulator tracks the unscaled delta, so ``scale = 1`` is plain AdaDelta.
"""
from dataclasses import dataclass

import numpy as np

from flmrsim.core.nn import Layer, ModelParams, ParamGrads
from flmrsim.errors import OptimizerError, ShapeError
from flmrsim.models.config import AdaDeltaConfig


@dataclass(frozen=True)
class AdaDeltaState:
    """Running averages of squared gradients and squared updates."""

    accum_grad_sq: tuple[Layer, ...]
    accum_update_sq: tuple[Layer, ...]
    rho: float = 0.85
    epsilon: float = 1e-6
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def init_adadelta(params: ModelParams, cfg: AdaDeltaConfig | None = None) -> AdaDeltaState:
    """Zero accumulators shaped like ``params``."""
    cfg = cfg or AdaDeltaConfig()
    grad_sq = tuple((np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers)
    update_sq = tuple((np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers)
    return AdaDeltaState(grad_sq, update_sq, rho=cfg.rho, epsilon=cfg.epsilon, scale=cfg.scale)


def _check_congruent(params: ModelParams, grads: ParamGrads, state: AdaDeltaState) -> None:
    expected = params.shapes
    for name, layers in (
        ("gradient", grads.layers),
        ("squared-gradient accumulator", state.accum_grad_sq),
        ("squared-update accumulator", state.accum_update_sq),
    ):
        shapes = tuple((w.shape, b.shape) for w, b in layers)
        if shapes != expected:
            raise ShapeError(f"{name} shapes {shapes} do not match parameters {expected}")


def adadelta_step(
    params: ModelParams, grads: ParamGrads, state: AdaDeltaState
) -> tuple[ModelParams, AdaDeltaState]:
    """Apply one AdaDelta update, returning new parameters and state."""
    _check_congruent(params, grads, state)
    rho, eps = state.rho, state.epsilon

    new_params: list[Layer] = []
    new_grad_sq: list[Layer] = []
    new_update_sq: list[Layer] = []
    for index, layer in enumerate(params.layers):
        grad_layer = grads.layers[index]
        if not (np.isfinite(grad_layer[0]).all() and np.isfinite(grad_layer[1]).all()):
            raise OptimizerError(index)
        updated, grad_sq, update_sq = [], [], []
        for value, g, eg2, ed2 in zip(
            layer, grad_layer, state.accum_grad_sq[index], state.accum_update_sq[index]
        ):
            eg2 = rho * eg2 + (1.0 - rho) * g * g
            delta = -(np.sqrt(ed2 + eps) / np.sqrt(eg2 + eps)) * g
            ed2 = rho * ed2 + (1.0 - rho) * delta * delta
            updated.append(value + state.scale * delta)
            grad_sq.append(eg2)
            update_sq.append(ed2)
        new_params.append((updated[0], updated[1]))
        new_grad_sq.append((grad_sq[0], grad_sq[1]))
        new_update_sq.append((update_sq[0], update_sq[1]))

    next_state = AdaDeltaState(
        tuple(new_grad_sq),
        tuple(new_update_sq),
        rho=rho,
        epsilon=eps,
        scale=state.scale,
    )
    return ModelParams.from_arrays(new_params), next_state
