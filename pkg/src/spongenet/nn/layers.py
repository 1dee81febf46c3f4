"""Layer implementations with hand-written forward/backward passes.

Every layer is a plain object holding its configuration and (for dense/conv)
its parameter arrays. Forward passes take a batch-leading float64 array and
return one; backward passes take the layer's saved input, its output, and the
adjoint of the output, and return the adjoint of the input plus per-parameter
gradients. ReLU and max-pooling produce *exact* zeros (no epsilon smearing),
which the zero-skipping census downstream relies on.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

Shape = tuple[int, ...]


def _as_pair(v) -> tuple[int, int]:
    if isinstance(v, (tuple, list)):
        a, b = v
        return int(a), int(b)
    return int(v), int(v)


def _window_view(x: np.ndarray, kh: int, kw: int, sh: int, sw: int) -> np.ndarray:
    """Read-only sliding-window view of x (B,C,H,W) -> (B,C,oh,ow,kh,kw)."""
    b, c, h, w = x.shape
    oh = (h - kh) // sh + 1
    ow = (w - kw) // sw + 1
    s0, s1, s2, s3 = x.strides
    return np.lib.stride_tricks.as_strided(
        x,
        shape=(b, c, oh, ow, kh, kw),
        strides=(s0, s1, s2 * sh, s3 * sw, s2, s3),
        writeable=False,
    )


class Layer:
    """Base class: stateless apart from parameters, no saved activations."""

    kind: str = "layer"
    #: whether the layer's output enters the activation trace (and hence K)
    recorded: bool = True

    @property
    def params(self) -> list[np.ndarray]:
        return []

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def init_params(self, rng: np.random.Generator) -> None:
        pass

    def out_shape(self, in_shape: Shape) -> Shape:
        raise NotImplementedError

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(
        self, x: np.ndarray, y: np.ndarray, dy: np.ndarray
    ) -> tuple[np.ndarray, list[np.ndarray]]:
        raise NotImplementedError

    def config(self) -> dict:
        """JSON-serializable constructor arguments (used by checkpoints)."""
        return {}


class Dense(Layer):
    """Fully connected layer: y = x @ W + b."""

    kind = "dense"

    def __init__(self, n_in: int, n_out: int):
        if n_in <= 0 or n_out <= 0:
            raise ShapeError(f"dense layer sizes must be positive, got {n_in}->{n_out}")
        self.n_in = int(n_in)
        self.n_out = int(n_out)
        self.weight = np.zeros((self.n_in, self.n_out))
        self.bias = np.zeros(self.n_out)

    @property
    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def init_params(self, rng: np.random.Generator) -> None:
        lim = np.sqrt(6.0 / self.n_in)
        self.weight = rng.uniform(-lim, lim, size=(self.n_in, self.n_out))
        self.bias = np.zeros(self.n_out)

    def out_shape(self, in_shape: Shape) -> Shape:
        if in_shape != (self.n_in,):
            raise ShapeError(f"dense expects input shape ({self.n_in},), got {in_shape}")
        return (self.n_out,)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weight + self.bias

    def backward(self, x, y, dy):
        dw = x.T @ dy
        db = dy.sum(axis=0)
        dx = dy @ self.weight.T
        return dx, [dw, db]

    def config(self) -> dict:
        return {"n_in": self.n_in, "n_out": self.n_out}


class Conv2d(Layer):
    """Valid (unpadded) 2-D convolution with stride; weight (C_out,C_in,kh,kw)."""

    kind = "conv2d"

    def __init__(self, in_channels: int, out_channels: int, kernel_size, stride=1):
        self.in_channels = int(in_channels)
        self.out_channels = int(out_channels)
        self.kernel_size = _as_pair(kernel_size)
        self.stride = _as_pair(stride)
        kh, kw = self.kernel_size
        self.weight = np.zeros((self.out_channels, self.in_channels, kh, kw))
        self.bias = np.zeros(self.out_channels)

    @property
    def params(self) -> list[np.ndarray]:
        return [self.weight, self.bias]

    def init_params(self, rng: np.random.Generator) -> None:
        kh, kw = self.kernel_size
        fan_in = self.in_channels * kh * kw
        lim = np.sqrt(6.0 / fan_in)
        self.weight = rng.uniform(-lim, lim, size=self.weight.shape)
        self.bias = np.zeros(self.out_channels)

    def out_shape(self, in_shape: Shape) -> Shape:
        kh, kw = self.kernel_size
        sh, sw = self.stride
        if len(in_shape) != 3 or in_shape[0] != self.in_channels:
            raise ShapeError(
                f"conv2d expects input (C={self.in_channels}, H, W), got {in_shape}"
            )
        _, h, w = in_shape
        if h < kh or w < kw:
            raise ShapeError(f"conv2d kernel {self.kernel_size} larger than input {in_shape}")
        return (self.out_channels, (h - kh) // sh + 1, (w - kw) // sw + 1)

    def forward(self, x: np.ndarray) -> np.ndarray:
        kh, kw = self.kernel_size
        sh, sw = self.stride
        view = _window_view(x, kh, kw, sh, sw)
        y = np.einsum("bcijuv,ocuv->boij", view, self.weight, optimize=True)
        return y + self.bias[None, :, None, None]

    def backward(self, x, y, dy):
        kh, kw = self.kernel_size
        sh, sw = self.stride
        oh, ow = dy.shape[2], dy.shape[3]
        view = _window_view(x, kh, kw, sh, sw)
        dw = np.einsum("boij,bcijuv->ocuv", dy, view, optimize=True)
        db = dy.sum(axis=(0, 2, 3))
        dx = np.zeros_like(x)
        # scatter dy back through each kernel offset
        for u in range(kh):
            for v in range(kw):
                dx[:, :, u : u + oh * sh : sh, v : v + ow * sw : sw] += np.einsum(
                    "boij,oc->bcij", dy, self.weight[:, :, u, v], optimize=True
                )
        return dx, [dw, db]

    def config(self) -> dict:
        return {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "kernel_size": list(self.kernel_size),
            "stride": list(self.stride),
        }


class ReLU(Layer):
    kind = "relu"

    def out_shape(self, in_shape: Shape) -> Shape:
        return in_shape

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(x, 0.0)

    def backward(self, x, y, dy):
        return dy * (x > 0.0), []


class _Pool2d(Layer):
    def __init__(self, kernel_size, stride=None):
        self.kernel_size = _as_pair(kernel_size)
        self.stride = _as_pair(stride if stride is not None else kernel_size)

    def out_shape(self, in_shape: Shape) -> Shape:
        kh, kw = self.kernel_size
        sh, sw = self.stride
        if len(in_shape) != 3:
            raise ShapeError(f"{self.kind} expects input (C, H, W), got {in_shape}")
        c, h, w = in_shape
        if h < kh or w < kw:
            raise ShapeError(f"{self.kind} window {self.kernel_size} larger than input {in_shape}")
        return (c, (h - kh) // sh + 1, (w - kw) // sw + 1)

    def config(self) -> dict:
        return {"kernel_size": list(self.kernel_size), "stride": list(self.stride)}


class MaxPool2d(_Pool2d):
    """Max pooling; ties resolve to the first maximum so gradients are deterministic."""

    kind = "maxpool2d"

    def forward(self, x: np.ndarray) -> np.ndarray:
        kh, kw = self.kernel_size
        sh, sw = self.stride
        view = _window_view(x, kh, kw, sh, sw)
        return view.max(axis=(4, 5))

    def backward(self, x, y, dy):
        kh, kw = self.kernel_size
        sh, sw = self.stride
        b, c, oh, ow = dy.shape
        view = _window_view(x, kh, kw, sh, sw).reshape(b, c, oh, ow, kh * kw)
        idx = view.argmax(axis=4)
        u, v = np.divmod(idx, kw)
        p = np.arange(oh)[None, None, :, None] * sh + u
        q = np.arange(ow)[None, None, None, :] * sw + v
        bi = np.arange(b)[:, None, None, None]
        ci = np.arange(c)[None, :, None, None]
        dx = np.zeros_like(x)
        np.add.at(dx, (bi, ci, p, q), dy)
        return dx, []


class AvgPool2d(_Pool2d):
    kind = "avgpool2d"

    def forward(self, x: np.ndarray) -> np.ndarray:
        kh, kw = self.kernel_size
        sh, sw = self.stride
        view = _window_view(x, kh, kw, sh, sw)
        return view.mean(axis=(4, 5))

    def backward(self, x, y, dy):
        kh, kw = self.kernel_size
        sh, sw = self.stride
        oh, ow = dy.shape[2], dy.shape[3]
        share = dy / (kh * kw)
        dx = np.zeros_like(x)
        for u in range(kh):
            for v in range(kw):
                dx[:, :, u : u + oh * sh : sh, v : v + ow * sw : sw] += share
        return dx, []


class Flatten(Layer):
    """Pass-through reshape to (B, -1); excluded from the activation trace."""

    kind = "flatten"
    recorded = False

    def out_shape(self, in_shape: Shape) -> Shape:
        return (int(np.prod(in_shape)),)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(x.shape[0], -1)

    def backward(self, x, y, dy):
        return dy.reshape(x.shape), []


LAYER_KINDS: dict[str, type[Layer]] = {
    cls.kind: cls for cls in (Dense, Conv2d, ReLU, MaxPool2d, AvgPool2d, Flatten)
}


def layer_from_config(kind: str, config: dict) -> Layer:
    try:
        cls = LAYER_KINDS[kind]
    except KeyError:
        raise ShapeError(f"unknown layer kind {kind!r}") from None
    return cls(**config)
