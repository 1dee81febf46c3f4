"""Softmax cross-entropy with its exact gradient."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood over a batch.

    Returns ``(loss, dlogits)`` where ``dlogits`` is the gradient of the mean
    loss, i.e. ``(softmax(logits) - onehot) / B``.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2:
        raise ShapeError(f"logits must be (B, C), got shape {logits.shape}")
    b, c = logits.shape
    if labels.shape != (b,):
        raise ShapeError(f"labels must have shape ({b},), got {labels.shape}")
    if labels.min() < 0 or labels.max() >= c:
        raise ShapeError(f"label out of range [0, {c})")

    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=1, keepdims=True)
    rows = np.arange(b)
    loss = float(-np.log(p[rows, labels]).mean())
    dlogits = p.copy()
    dlogits[rows, labels] -= 1.0
    dlogits /= b
    return loss, dlogits
