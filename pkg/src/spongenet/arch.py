"""Named toy architectures used by the CLI."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .nn.layers import Conv2d, Dense, Flatten, Layer, MaxPool2d, ReLU


def _mlp(input_shape, n_classes, hidden: list[int]) -> list[Layer]:
    if len(input_shape) != 1:
        raise ConfigError(f"mlp architectures need flat inputs, got shape {input_shape}")
    sizes = [input_shape[0], *hidden]
    layers: list[Layer] = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        layers += [Dense(n_in, n_out), ReLU()]
    layers.append(Dense(sizes[-1], n_classes))
    return layers


def _cnn_tiny(input_shape, n_classes) -> list[Layer]:
    if len(input_shape) != 3:
        raise ConfigError(f"cnn-tiny needs (c, h, w) inputs, got shape {input_shape}")
    c = input_shape[0]
    layers: list[Layer] = [
        Conv2d(c, 8, 3),
        ReLU(),
        MaxPool2d(2, 2),
        Conv2d(8, 16, 3),
        ReLU(),
        MaxPool2d(2, 2),
        Flatten(),
    ]
    shape = tuple(input_shape)
    for ly in layers:
        shape = ly.out_shape(shape)
    flat = int(np.prod(shape))
    layers += [Dense(flat, 32), ReLU(), Dense(32, n_classes)]
    return layers


ARCHITECTURES = {
    "mlp-small": lambda shape, c: _mlp(shape, c, [32]),
    "mlp": lambda shape, c: _mlp(shape, c, [64, 32]),
    "cnn-tiny": _cnn_tiny,
}


def make_architecture(name: str, input_shape: tuple[int, ...], n_classes: int) -> list[Layer]:
    try:
        builder = ARCHITECTURES[name]
    except KeyError:
        raise ConfigError(
            f"unknown architecture {name!r}; available: {sorted(ARCHITECTURES)}"
        ) from None
    return builder(tuple(int(d) for d in input_shape), int(n_classes))
