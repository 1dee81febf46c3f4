"""SGD with momentum and weight decay, plus the exponential LR schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DivergenceError, ShapeError
from .network import Gradients, Network


@dataclass
class OptimizerState:
    """Mutable optimizer state: one velocity buffer per parameter tensor."""

    lr: float
    momentum: float = 0.0
    weight_decay: float = 0.0
    velocities: list[list[np.ndarray]] = field(default_factory=list)
    epoch: int = 0

    def ensure_velocities(self, net: Network) -> None:
        if not self.velocities:
            self.velocities = [[np.zeros_like(p) for p in ly.params] for ly in net.layers]
        for vs, ly in zip(self.velocities, net.layers):
            for v, p in zip(vs, ly.params):
                if v.shape != p.shape:
                    raise ShapeError(
                        f"velocity shape {v.shape} does not match parameter {p.shape}"
                    )


def lr_schedule(initial: float, decay: float, epoch: int) -> float:
    """Exponential schedule: initial * decay**epoch."""
    if not 0.0 < decay <= 1.0:
        raise ValueError(f"decay must be in (0, 1], got {decay}")
    return initial * decay**epoch


def sgd_step(net: Network, grads: Gradients, state: OptimizerState) -> Network:
    """One in-place update: v <- mu*v + g + wd*p;  p <- p - lr*v."""
    state.ensure_velocities(net)
    for i, (ly, gs) in enumerate(zip(net.layers, grads)):
        params = ly.params
        if len(gs) != len(params):
            raise ShapeError(f"layer {net.layer_names[i]}: got {len(gs)} gradients "
                             f"for {len(params)} parameters")
        for p, g, v in zip(params, gs, state.velocities[i]):
            if g.shape != p.shape:
                raise ShapeError(
                    f"layer {net.layer_names[i]}: gradient shape {g.shape} != {p.shape}"
                )
            if not np.all(np.isfinite(g)):
                raise DivergenceError(f"non-finite gradient in layer {net.layer_names[i]}")
            v *= state.momentum
            v += g
            if state.weight_decay:
                v += state.weight_decay * p
            p -= state.lr * v
    return net
