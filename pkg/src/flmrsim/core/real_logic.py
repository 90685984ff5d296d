"""Smooth equality, diagonal universal quantification and the satisfaction loss.

The single axiom is ``forall diag(x, y): eq(f(x), y)``. Diagonal
quantification pairs each prediction with its own target, so eq is evaluated
once per sample and the per-sample truths are aggregated with the p-mean
error, ``1 - (mean((1 - a_i)^p))^(1/p)``. Training minimizes ``1 - phi``.
"""
from dataclasses import replace

import numpy as np

from flmrsim.core.nn import ModelParams, predict
from flmrsim.errors import ShapeError, UsageError
from flmrsim.models.config import FuzzyConfig
from flmrsim.models.reports import SatisfactionReport


def _paired(prediction: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ShapeError(f"prediction {prediction.shape} and target {target.shape} differ")
    return prediction, target


def eq_predicate(prediction: np.ndarray, target: np.ndarray, alpha: float) -> float:
    """Smooth equality 1 / (1 + alpha * ||prediction - target||)."""
    prediction, target = _paired(np.atleast_1d(prediction), np.atleast_1d(target))
    distance = float(np.sqrt(np.sum((prediction - target) ** 2)))
    return 1.0 / (1.0 + alpha * distance)


def eq_gradient(prediction: np.ndarray, target: np.ndarray, alpha: float) -> np.ndarray:
    """Derivative of eq_predicate with respect to the prediction vector.

    At zero distance the square root has a kink; the zero vector is returned.
    """
    prediction, target = _paired(np.atleast_1d(prediction), np.atleast_1d(target))
    diff = prediction - target
    distance = float(np.sqrt(np.sum(diff**2)))
    if distance == 0.0:
        return np.zeros_like(diff)
    return -alpha * diff / (distance * (1.0 + alpha * distance) ** 2)


def eq_batch(predictions: np.ndarray, targets: np.ndarray, alpha: float) -> np.ndarray:
    """eq_predicate for every (prediction, target) row pair of a batch."""
    predictions, targets = _paired(_rows(predictions), _rows(targets))
    distances = np.sqrt(np.sum((predictions - targets) ** 2, axis=1))
    return 1.0 / (1.0 + alpha * distances)


def forall_diag(eq_values: np.ndarray, p: float) -> float:
    """p-mean-error universal quantifier over per-sample truth values."""
    values = np.asarray(eq_values, dtype=np.float64).ravel()
    if values.size == 0:
        raise UsageError("cannot quantify over an empty batch")
    if p < 1:
        raise UsageError(f"aggregator exponent must be >= 1, got {p}")
    if np.any(values <= 0.0) or np.any(values > 1.0):
        raise UsageError("truth values must lie in (0, 1]")
    errors = 1.0 - values
    return float(1.0 - np.mean(errors**p) ** (1.0 / p))


def satisfaction_loss(phi: float) -> float:
    """Loss 1 - phi of a satisfaction level."""
    if not 0.0 <= phi <= 1.0:
        raise UsageError(f"satisfaction level {phi} outside [0, 1]")
    return 1.0 - phi


def loss_and_grad(
    predictions: np.ndarray, targets: np.ndarray, cfg: FuzzyConfig
) -> tuple[SatisfactionReport, np.ndarray]:
    """Satisfaction report of a batch and dLoss/dPrediction, shaped like predictions."""
    shape = np.shape(predictions)
    preds, targs = _paired(_rows(predictions), _rows(targets))
    if preds.shape[0] == 0:
        raise UsageError("cannot quantify over an empty batch")

    report = _satisfaction(preds, targs, cfg)
    truths = report.per_sample_eq
    diff = preds - targs
    distances = np.sqrt(np.sum(diff**2, axis=1))

    errors = 1.0 - truths
    mean_power = float(np.mean(errors**cfg.p))
    if mean_power == 0.0:
        return report, np.zeros(shape)
    # d(loss)/d(eq_i) for loss = (mean (1 - eq)^p)^(1/p)
    dloss_deq = -(mean_power ** (1.0 / cfg.p - 1.0)) * errors ** (cfg.p - 1.0) / len(truths)

    safe = np.where(distances > 0.0, distances, 1.0)
    deq_dpred = -cfg.alpha * diff / (safe * (1.0 + cfg.alpha * distances) ** 2)[:, None]
    deq_dpred[distances == 0.0] = 0.0
    grad = dloss_deq[:, None] * deq_dpred
    return report, grad.reshape(shape)


def query_satisfaction(
    params: ModelParams, features: np.ndarray, targets: np.ndarray, cfg: FuzzyConfig
) -> SatisfactionReport:
    """Evaluate the axiom for a fixed model on arbitrary labelled data."""
    predictions = predict(params, features)
    report = _satisfaction(*_paired(_rows(predictions), _rows(targets)), cfg)
    return replace(report, predictions=predictions)


def _satisfaction(preds: np.ndarray, targs: np.ndarray, cfg: FuzzyConfig) -> SatisfactionReport:
    truths = eq_batch(preds, targs, cfg.alpha)
    phi = forall_diag(truths, cfg.p)
    return SatisfactionReport(phi=phi, per_sample_eq=truths, loss=satisfaction_loss(phi))


def _rows(values: np.ndarray) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 1:
        return array.reshape(-1, 1)
    if array.ndim != 2:
        raise ShapeError(f"expected a batch of vectors, got shape {array.shape}")
    return array
