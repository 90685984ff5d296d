"""Asymmetric capacity-forecast cost used as the comparison baseline.

With ``x = prediction - target``:

* ``x >= 0`` (overprovisioning): ``over_slope * x``
* ``-epsilon_smooth <= x < 0``: linear ramp up to the violation penalty
* ``x < -epsilon_smooth``: ``alpha_penalty + under_slope * (-x - epsilon_smooth)``
"""
import numpy as np

from flmrsim.errors import ShapeError
from flmrsim.models.config import DeepCogLossConfig


def deepcog_loss(prediction: float, target: float, cfg: DeepCogLossConfig) -> float:
    """Cost of provisioning ``prediction`` for a demand of ``target``."""
    return float(deepcog_losses(np.array([prediction]), np.array([target]), cfg)[0])


def deepcog_gradient(prediction: float, target: float, cfg: DeepCogLossConfig) -> float:
    """Right-hand derivative of deepcog_loss with respect to the prediction."""
    return float(deepcog_gradients(np.array([prediction]), np.array([target]), cfg)[0])


def deepcog_losses(
    predictions: np.ndarray, targets: np.ndarray, cfg: DeepCogLossConfig
) -> np.ndarray:
    """Element-wise deepcog_loss."""
    x = _excess(predictions, targets)
    ramp = cfg.alpha_penalty * (-x) / cfg.epsilon_smooth
    tail = cfg.alpha_penalty + cfg.under_slope * (-x - cfg.epsilon_smooth)
    return np.where(x >= 0.0, cfg.over_slope * x, np.where(x >= -cfg.epsilon_smooth, ramp, tail))


def deepcog_gradients(
    predictions: np.ndarray, targets: np.ndarray, cfg: DeepCogLossConfig
) -> np.ndarray:
    """Element-wise deepcog_gradient; breakpoints take the right-hand slope."""
    x = _excess(predictions, targets)
    ramp_slope = -cfg.alpha_penalty / cfg.epsilon_smooth
    inner = np.where(x >= -cfg.epsilon_smooth, ramp_slope, -cfg.under_slope)
    return np.where(x >= 0.0, cfg.over_slope, inner)


def batch_loss_and_grad(
    predictions: np.ndarray, targets: np.ndarray, cfg: DeepCogLossConfig
) -> tuple[float, np.ndarray]:
    """Mean cost over a batch and its derivative for each prediction."""
    shape = np.shape(predictions)
    flat_pred = np.asarray(predictions, dtype=np.float64).ravel()
    flat_true = np.asarray(targets, dtype=np.float64).ravel()
    n = flat_pred.size
    loss = float(np.mean(deepcog_losses(flat_pred, flat_true, cfg)))
    grad = deepcog_gradients(flat_pred, flat_true, cfg) / n
    return loss, grad.reshape(shape)


def _excess(predictions: np.ndarray, targets: np.ndarray) -> np.ndarray:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ShapeError(f"prediction {predictions.shape} and target {targets.shape} differ")
    return predictions - targets
