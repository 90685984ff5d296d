"""Test the smooth equality predicate, the quantifier and the satisfaction loss."""
import numpy as np
import pytest

from flmrsim.core.nn import init_params, predict
from flmrsim.core.real_logic import (
    eq_batch,
    eq_gradient,
    eq_predicate,
    forall_diag,
    loss_and_grad,
    query_satisfaction,
    satisfaction_loss,
)
from flmrsim.errors import ShapeError, UsageError
from flmrsim.models.config import FuzzyConfig


def test_eq_identity_and_examples():
    """Test eq on equal values and the alpha = 0.5 examples."""
    assert eq_predicate(np.array([0.3, 0.7]), np.array([0.3, 0.7]), 0.5) == 1.0
    assert eq_predicate(2.5, 0.5, 0.5) == 0.5
    assert eq_predicate(0.6, 0.5, 0.5) == pytest.approx(1 / 1.05, rel=1e-9)


def test_eq_decreases_with_distance():
    """Test that eq is strictly decreasing in the distance."""
    values = [eq_predicate(0.5 + d, 0.5, 0.5) for d in (0.0, 0.1, 0.5, 2.0)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_eq_shape_mismatch():
    """Test that differently shaped vectors are refused."""
    with pytest.raises(ShapeError):
        eq_predicate(np.zeros(2), np.zeros(3), 0.5)


def test_eq_decreases_with_alpha():
    """Test that eq is strictly decreasing in alpha at a fixed nonzero distance."""
    values = [eq_predicate(0.7, 0.5, alpha) for alpha in (0.1, 0.5, 1.0, 2.0, 10.0)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert eq_predicate(0.5, 0.5, 10.0) == eq_predicate(0.5, 0.5, 0.1) == 1.0


def test_eq_gradient_examples():
    """Test the kink convention, the diff = 2 example and the sign rule."""
    assert np.all(eq_gradient(0.4, 0.4, 0.5) == 0.0)
    assert eq_gradient(2.0, 0.0, 0.5)[0] == pytest.approx(-0.125)
    assert eq_gradient(0.9, 0.2, 0.5)[0] < 0
    assert eq_gradient(0.1, 0.2, 0.5)[0] > 0


def test_eq_gradient_matches_finite_difference():
    """Test eq_gradient against a central difference."""
    h = 1e-6
    numeric = (eq_predicate(0.7 + h, 0.2, 0.5) - eq_predicate(0.7 - h, 0.2, 0.5)) / (2 * h)
    assert eq_gradient(0.7, 0.2, 0.5)[0] == pytest.approx(numeric, rel=1e-6)


def test_eq_batch_matches_pairwise():
    """Test that batch evaluation pairs each prediction with its own target."""
    predictions = np.array([0.1, 0.5, 0.9])
    targets = np.array([0.1, 0.2, 0.4])
    expected = [eq_predicate(p, t, 0.5) for p, t in zip(predictions, targets)]
    np.testing.assert_allclose(eq_batch(predictions, targets, 0.5), expected)
    report, _ = loss_and_grad(predictions, targets, FuzzyConfig(alpha=0.5))
    np.testing.assert_array_equal(report.per_sample_eq, eq_batch(predictions, targets, 0.5))


def test_forall_examples():
    """Test the p-mean-error aggregator on the worked examples."""
    assert forall_diag(np.ones(4), 2.0) == 1.0
    assert forall_diag(np.array([1.0, 1.0, 0.5]), 1.0) == pytest.approx(1 - 0.5 / 3)
    assert forall_diag(np.array([1.0, 0.6, 0.8]), 2.0) == pytest.approx(0.74180, abs=1e-5)


def test_forall_preconditions():
    """Test the empty-batch, exponent and range checks."""
    with pytest.raises(UsageError):
        forall_diag(np.array([]), 2.0)
    with pytest.raises(UsageError):
        forall_diag(np.array([0.5]), 0.5)
    with pytest.raises(UsageError):
        forall_diag(np.array([0.0, 0.5]), 2.0)


def test_forall_monotone_in_each_value():
    """Test that raising one truth value never lowers the aggregate."""
    rng = np.random.default_rng(4)
    values = rng.uniform(0.2, 1.0, 10)
    for i in range(values.size):
        raised = values.copy()
        raised[i] = min(1.0, raised[i] + 0.1)
        assert forall_diag(raised, 2.0) >= forall_diag(values, 2.0)


def test_forall_bounded_by_extremes():
    """Test that the aggregate lies between the smallest value and 1."""
    values = np.array([0.3, 0.9, 0.7])
    for p in (1.0, 2.0, 6.0):
        phi = forall_diag(values, p)
        assert values.min() <= phi <= 1.0


def test_forall_non_increasing_in_p():
    """Test that a larger exponent never raises the aggregate of a fixed value list."""
    values = np.random.default_rng(9).uniform(0.1, 1.0, 25)
    phis = [forall_diag(values, p) for p in (1.0, 1.5, 2.0, 3.0, 5.0, 10.0)]
    assert all(a >= b for a, b in zip(phis, phis[1:]))
    assert phis[0] == pytest.approx(1.0 - np.mean(1.0 - values), abs=1e-15)


def test_satisfaction_loss():
    """Test loss = 1 - phi and its domain."""
    assert satisfaction_loss(1.0) == 0.0
    assert satisfaction_loss(0.0) == 1.0
    assert satisfaction_loss(0.98) == pytest.approx(0.02)
    with pytest.raises(UsageError):
        satisfaction_loss(1.2)


def test_loss_and_grad_exact_predictions():
    """Test zero loss and zero gradient for perfect predictions."""
    targets = np.array([0.2, 0.5, 0.8])
    report, grad = loss_and_grad(targets.copy(), targets, FuzzyConfig())
    assert report.loss == 0.0
    assert report.phi == 1.0
    assert np.all(grad == 0.0)


def test_loss_is_one_minus_phi_exactly():
    """Test that the report's loss is bit-exactly 1 - phi."""
    rng = np.random.default_rng(6)
    report, _ = loss_and_grad(rng.random((9, 1)), rng.random(9), FuzzyConfig())
    assert report.loss == 1.0 - report.phi
    assert report.per_sample_eq.shape == (9,)


def test_loss_gradient_matches_finite_differences():
    """Test dLoss/dPred on a random batch of 8 against central differences."""
    rng = np.random.default_rng(12)
    predictions = rng.random(8)
    targets = rng.random(8)
    cfg = FuzzyConfig(alpha=0.5, p=2.0)
    _, grad = loss_and_grad(predictions, targets, cfg)
    h = 1e-6
    for i in range(8):
        up, down = predictions.copy(), predictions.copy()
        up[i] += h
        down[i] -= h
        numeric = (
            loss_and_grad(up, targets, cfg)[0].loss - loss_and_grad(down, targets, cfg)[0].loss
        ) / (2 * h)
        assert grad[i] == pytest.approx(numeric, rel=1e-6, abs=1e-10)


def test_loss_and_grad_keeps_prediction_shape():
    """Test that column predictions give a column gradient."""
    _, grad = loss_and_grad(np.full((4, 1), 0.3), np.full(4, 0.6), FuzzyConfig())
    assert grad.shape == (4, 1)
    assert np.all(grad < 0)


def test_query_satisfaction_matches_manual(small_params):
    """Test querying the axiom with a fixed model."""
    rng = np.random.default_rng(2)
    x, y = rng.random((12, 5)), rng.random(12)
    cfg = FuzzyConfig()
    report = query_satisfaction(small_params, x, y, cfg)
    expected, _ = loss_and_grad(predict(small_params, x), y, cfg)
    assert report.phi == expected.phi
    np.testing.assert_array_equal(report.per_sample_eq, expected.per_sample_eq)
    np.testing.assert_array_equal(report.predictions, predict(small_params, x))
    assert expected.predictions.size == 0
    assert 0.0 < report.phi <= 1.0
