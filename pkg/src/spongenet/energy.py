"""Differentiable activation-energy objectives.

The core quantity is a smoothed count of nonzero activations,

    smooth_l0(x, sigma) = sum_j x_j**2 / (x_j**2 + sigma),    sigma > 0,

which lies in [0, d) for a d-vector, vanishes exactly at x = 0, and converges
to the true nonzero count as sigma -> 0+. Summed over every recorded layer of
a trace it gives a network-wide firing-neuron count; dividing by the model's
parameter count rescales it into a magnitude-stable training objective. The
squared-L2 objective is kept alongside as the magnitude-only baseline: it
grows with activation size rather than with how many activations fire.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn.network import ActivationTrace, Gradients, Network, backward


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 0.0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    return sigma


def smooth_l0(x: np.ndarray, sigma: float) -> float:
    """Smoothed nonzero count of all elements of ``x``."""
    sigma = _check_sigma(sigma)
    x2 = np.square(np.asarray(x, dtype=np.float64))
    return float((x2 / (x2 + sigma)).sum())


def smooth_l0_grad(x: np.ndarray, sigma: float) -> np.ndarray:
    """Elementwise gradient of :func:`smooth_l0`: 2*x*sigma / (x**2 + sigma)**2."""
    sigma = _check_sigma(sigma)
    x = np.asarray(x, dtype=np.float64)
    return 2.0 * x * sigma / np.square(np.square(x) + sigma)


@dataclass(frozen=True)
class EnergyValue:
    """Scalar energy plus its per-layer breakdown (batch-averaged)."""

    value: float
    per_layer: tuple[float, ...]


def _per_layer_means(trace: ActivationTrace, fn) -> list[float]:
    b = trace.batch_size
    return [float(fn(a)) / b for a in trace.activations]


def trace_energy(
    trace: ActivationTrace, sigma: float, normalize_by: int | None = None
) -> EnergyValue:
    """Smoothed firing count summed over all recorded layers of a trace.

    ``per_layer[k]`` is the batch-mean smoothed count for layer k (bounded by
    that layer's per-sample dimensionality); ``value`` is their sum, divided
    by ``normalize_by`` when given (conventionally the parameter count m).
    """
    sigma = _check_sigma(sigma)
    if len(trace) == 0:
        raise ValueError("empty activation trace")

    def total(a: np.ndarray) -> float:
        x2 = np.square(a)
        return (x2 / (x2 + sigma)).sum()

    per_layer = _per_layer_means(trace, total)
    value = sum(per_layer) / (normalize_by if normalize_by else 1)
    return EnergyValue(value=value, per_layer=tuple(per_layer))


def l2_trace_energy(trace: ActivationTrace, normalize_by: int | None = None) -> EnergyValue:
    """Squared Euclidean norm of each recorded layer, batch-averaged."""
    if len(trace) == 0:
        raise ValueError("empty activation trace")
    per_layer = _per_layer_means(trace, lambda a: np.square(a).sum())
    value = sum(per_layer) / (normalize_by if normalize_by else 1)
    return EnergyValue(value=value, per_layer=tuple(per_layer))


OBJECTIVES = ("l0_hat", "l2")


def activation_adjoints(
    trace: ActivationTrace,
    objective: str,
    sigma: float | None,
    scale: float = 1.0,
    row_weights: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Per-activation adjoints of the chosen objective, one array per layer.

    ``scale`` multiplies every adjoint (used for 1/B, 1/m and sign factors);
    ``row_weights`` optionally reweights individual samples in the batch,
    e.g. to restrict the objective to a subset of rows.
    """
    if objective == "l0_hat":
        if sigma is None:
            raise ValueError("sigma is required for the l0_hat objective")
        grad = lambda a: smooth_l0_grad(a, sigma)
    elif objective == "l2":
        grad = lambda a: 2.0 * a
    else:
        raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")

    adjoints = []
    for a in trace.activations:
        g = grad(a) * scale
        if row_weights is not None:
            g *= row_weights.reshape((-1,) + (1,) * (a.ndim - 1))
        adjoints.append(g)
    return adjoints


def energy_weight_grad(
    net: Network,
    trace: ActivationTrace,
    sigma: float | None = None,
    objective: str = "l0_hat",
    normalize_by: int | None = None,
) -> Gradients:
    """Gradient of the trace energy with respect to every network parameter.

    Adjoints for all recorded layers are injected simultaneously into one
    backward sweep, so the cost matches a single loss backward. The result is
    the exact gradient of :func:`trace_energy` (or :func:`l2_trace_energy`)
    evaluated on a fresh forward pass of ``net``.
    """
    scale = 1.0 / (trace.batch_size * (normalize_by if normalize_by else 1))
    adjoints = activation_adjoints(trace, objective, sigma, scale=scale)
    return backward(net, trace, dlogits=None, activation_adjoints=adjoints)
