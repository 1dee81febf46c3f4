import numpy as np
import pytest

from spongenet.nn import (
    AvgPool2d,
    Conv2d,
    Dense,
    Flatten,
    MaxPool2d,
    ReLU,
    build_network,
)


def rel_err(a, b, floor=1e-12):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def central_diff(f, x0, h=1e-4):
    """Central finite difference of a scalar function at a scalar point."""
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h)


def param_finite_diff(scalar_fn, param, flat_index, h=1e-4):
    """Central difference of ``scalar_fn()`` w.r.t. one parameter entry."""
    flat = param.reshape(-1)
    orig = flat[flat_index]
    flat[flat_index] = orig + h
    fp = scalar_fn()
    flat[flat_index] = orig - h
    fm = scalar_fn()
    flat[flat_index] = orig
    return (fp - fm) / (2.0 * h)


@pytest.fixture
def toy_cnn():
    """2-conv + 2-dense network on 1x12x12 inputs, 3 classes."""
    spec = [
        Conv2d(1, 4, 3),
        ReLU(),
        MaxPool2d(2, 2),
        Conv2d(4, 6, 3),
        ReLU(),
        AvgPool2d(3, 3),
        Flatten(),
        Dense(6, 8),
        ReLU(),
        Dense(8, 3),
    ]
    return build_network(spec, seed=11, input_shape=(1, 12, 12))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
