"""Softmax cross-entropy values and gradient."""

import numpy as np
import pytest

from spongenet.errors import ShapeError
from spongenet.nn import cross_entropy

from conftest import rel_err


def test_uniform_logits_give_log_c():
    for c in (2, 3, 10):
        logits = np.zeros((4, c))
        loss, _ = cross_entropy(logits, np.zeros(4, dtype=int))
        assert abs(loss - np.log(c)) < 1e-12


def test_loss_vanishes_with_growing_margin():
    losses = []
    for margin in (1.0, 10.0, 100.0):
        logits = np.array([[margin, 0.0, 0.0]])
        loss, _ = cross_entropy(logits, np.array([0]))
        losses.append(loss)
    assert losses[0] > losses[1] > losses[2]
    assert losses[2] < 1e-12


def test_loss_is_nonnegative(rng):
    logits = rng.normal(size=(16, 5)) * 3
    labels = rng.integers(0, 5, size=16)
    loss, _ = cross_entropy(logits, labels)
    assert loss >= 0.0


def test_gradient_matches_finite_differences(rng):
    """Random 3-class case; dlogits vs central differences, rel err < 1e-4."""
    logits = rng.normal(size=(5, 3))
    labels = rng.integers(0, 3, size=5)
    _, dlogits = cross_entropy(logits, labels)
    h = 1e-6
    for i in range(5):
        for j in range(3):
            lp = logits.copy()
            lp[i, j] += h
            lm = logits.copy()
            lm[i, j] -= h
            fd = (cross_entropy(lp, labels)[0] - cross_entropy(lm, labels)[0]) / (2 * h)
            assert rel_err(dlogits[i, j], fd, floor=1e-9) < 1e-4


def test_gradient_rows_sum_to_zero(rng):
    logits = rng.normal(size=(8, 4))
    _, dlogits = cross_entropy(logits, rng.integers(0, 4, size=8))
    np.testing.assert_allclose(dlogits.sum(axis=1), 0.0, atol=1e-15)


def test_label_out_of_range_rejected():
    with pytest.raises(ShapeError, match="label"):
        cross_entropy(np.zeros((2, 3)), np.array([0, 3]))
    with pytest.raises(ShapeError, match="label"):
        cross_entropy(np.zeros((2, 3)), np.array([-1, 0]))


def test_extreme_logits():
    # winning side is exactly 0 loss, no overflow
    loss, dlogits = cross_entropy(np.array([[1e4, -1e4, 0.0]]), np.array([0]))
    assert loss == 0.0
    assert np.isfinite(dlogits).all()
    # a hopeless margin underflows to probability 0 -> inf loss; this is the
    # signal the training loop's divergence guard watches for
    with np.errstate(divide="ignore"):
        loss, dlogits = cross_entropy(np.array([[1e4, -1e4, 0.0]]), np.array([1]))
    assert np.isinf(loss)
    assert np.isfinite(dlogits).all()
