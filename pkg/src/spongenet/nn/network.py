"""Network container, deterministic construction, and trace-based autodiff.

A network is an ordered list of layers. ``forward`` records every layer's
post-operator output; the public :class:`ActivationTrace` exposes the subset
of *recorded* layers (everything except flatten, which is a pure reshape).
``backward`` replays a trace in reverse and supports two adjoint sources at
once: an adjoint on the logits (the loss path) and per-activation adjoints
injected at every recorded layer (the energy path). Both are accumulated in a
single reverse sweep, so the gradient of ``loss + g(trace)`` costs one pass.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError, TraceMismatchError
from .layers import Layer

Gradients = list[list[np.ndarray]]


class ActivationTrace:
    """Post-operator activations from one forward pass.

    ``activations[k]`` has batch-leading shape; ``dims[k]`` is the per-sample
    dimensionality of recorded layer k. Internals keep every layer output so
    the trace can seed a backward pass without recomputation.
    """

    def __init__(
        self,
        batch: np.ndarray,
        outputs: list[np.ndarray],
        recorded: list[int],
        names: list[str],
        kinds: list[str],
    ):
        self._batch = batch
        self._outputs = outputs
        self.layer_indices = recorded
        self.layer_names = names
        self.layer_kinds = kinds
        self.activations = [outputs[i] for i in recorded]
        self.dims = [int(np.prod(a.shape[1:])) for a in self.activations]
        self.batch_size = int(batch.shape[0])

    def __len__(self) -> int:
        return len(self.activations)


class Network:
    def __init__(self, layers: list[Layer], input_shape: tuple[int, ...]):
        self.layers = layers
        self.input_shape = tuple(int(d) for d in input_shape)
        self.layer_names = [f"{ly.kind}_{i}" for i, ly in enumerate(layers)]

    @property
    def m(self) -> int:
        """Total parameter count."""
        return sum(ly.n_params for ly in self.layers)

    @property
    def K(self) -> int:
        """Number of layers that produce a recorded activation."""
        return sum(1 for ly in self.layers if ly.recorded)

    @property
    def output_shape(self) -> tuple[int, ...]:
        shape = self.input_shape
        for ly in self.layers:
            shape = ly.out_shape(shape)
        return shape

    def recorded_layers(self) -> list[tuple[int, Layer]]:
        return [(i, ly) for i, ly in enumerate(self.layers) if ly.recorded]


def build_network(
    spec: list[Layer], seed: int, input_shape: tuple[int, ...] | None = None
) -> Network:
    """Validate layer compatibility and initialize parameters from ``seed``.

    Weights are drawn uniformly from +-sqrt(6/fan_in); biases start at zero.
    The same spec and seed always produce bit-identical parameters.
    ``input_shape`` is the per-sample shape; it may be omitted when the first
    layer is dense (it is then inferred as ``(n_in,)``).
    """
    if not spec:
        raise ShapeError("empty network")
    if input_shape is None:
        first = spec[0]
        if first.kind != "dense":
            raise ShapeError(
                f"input_shape is required when the first layer is {first.kind!r}"
            )
        input_shape = (first.n_in,)

    shape = tuple(int(d) for d in input_shape)
    for i, ly in enumerate(spec):
        try:
            shape = ly.out_shape(shape)
        except ShapeError as e:
            prev = spec[i - 1].kind if i > 0 else "input"
            raise ShapeError(f"layer {i} ({prev} -> {ly.kind}): {e}") from None

    rng = np.random.default_rng(seed)
    for ly in spec:
        ly.init_params(rng)
    return Network(spec, input_shape)


def forward(net: Network, batch: np.ndarray) -> tuple[np.ndarray, ActivationTrace]:
    """Run a batch through the network, returning logits and the trace."""
    batch = np.ascontiguousarray(batch, dtype=np.float64)
    if batch.shape[1:] != net.input_shape:
        raise ShapeError(
            f"batch shape {batch.shape[1:]} does not match network input {net.input_shape}"
        )
    outputs: list[np.ndarray] = []
    x = batch
    for ly in net.layers:
        x = ly.forward(x)
        outputs.append(x)
    recorded = [i for i, ly in enumerate(net.layers) if ly.recorded]
    trace = ActivationTrace(
        batch,
        outputs,
        recorded,
        names=[net.layer_names[i] for i in recorded],
        kinds=[net.layers[i].kind for i in recorded],
    )
    return outputs[-1], trace


def backward(
    net: Network,
    trace: ActivationTrace,
    dlogits: np.ndarray | None = None,
    activation_adjoints: list[np.ndarray | None] | None = None,
) -> Gradients:
    """Reverse sweep over a trace, returning per-layer parameter gradients.

    ``dlogits`` is the adjoint of the final output (may be None for pure
    activation objectives). ``activation_adjoints`` is aligned with the
    trace's recorded layers; entry k is added to the adjoint of activation k
    before backpropagating through that layer, so any scalar function of the
    trace can be differentiated by supplying its per-activation gradients.
    """
    if len(trace._outputs) != len(net.layers):
        raise TraceMismatchError(
            f"trace has {len(trace._outputs)} layer outputs, network has {len(net.layers)}"
        )
    logits = trace._outputs[-1]
    if dlogits is None:
        carry = np.zeros_like(logits)
    else:
        if dlogits.shape != logits.shape:
            raise TraceMismatchError(
                f"dlogits shape {dlogits.shape} does not match logits {logits.shape}"
            )
        carry = dlogits.copy()
    if activation_adjoints is not None and len(activation_adjoints) != len(trace):
        raise TraceMismatchError(
            f"{len(activation_adjoints)} adjoints supplied for {len(trace)} recorded layers"
        )

    adj_by_layer: dict[int, np.ndarray] = {}
    if activation_adjoints is not None:
        for k, adj in enumerate(activation_adjoints):
            if adj is None:
                continue
            li = trace.layer_indices[k]
            if adj.shape != trace._outputs[li].shape:
                raise TraceMismatchError(
                    f"adjoint {k} shape {adj.shape} does not match activation "
                    f"{trace._outputs[li].shape}"
                )
            adj_by_layer[li] = adj

    grads: Gradients = [[] for _ in net.layers]
    for i in range(len(net.layers) - 1, -1, -1):
        ly = net.layers[i]
        x_in = trace._batch if i == 0 else trace._outputs[i - 1]
        y_out = trace._outputs[i]
        if i in adj_by_layer:
            carry = carry + adj_by_layer[i]
        carry, grads[i] = ly.backward(x_in, y_out, carry)
    return grads
