"""Zero-skipping accelerator cost model.

Counts the scalar operations a sparsity-aware accelerator would execute for
one forward pass. Multiply-accumulates whose *activation* operand is exactly
0.0 are skippable; everything else is not. The cost model is deliberately
flat: one unit per MAC, one unit per fixed op, no memory traffic term, so the
two derived metrics are pure operation-count ratios.

Per layer kind (per sample):

=============  =========================================  ====================
kind           total_macs                                 fixed_ops
=============  =========================================  ====================
dense          n_in * n_out                               n_out bias adds
conv2d         oh * ow * C_out * C_in * kh * kw           C_out*oh*ow bias adds
relu           0                                          one compare per element
maxpool2d      0                                          (kh*kw - 1) compares per window
avgpool2d      0                                          kh*kw ops per window (adds + scale)
flatten        0                                          0
=============  =========================================  ====================

``skipped_macs`` counts the multiplies whose input activation is exactly 0.0
(each zero input feeds n_out multiplies in a dense layer, and C_out multiplies
per window position it appears in for a convolution). Zero *weights* never
trigger a skip. Counts are accumulated as exact integers over the batch; the
exported records divide by the sample count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .nn.layers import _window_view
from .nn.network import ActivationTrace, Network


@dataclass(frozen=True)
class LayerCensus:
    name: str
    kind: str
    total_macs: int
    skipped_macs: int
    fixed_ops: int


@dataclass(frozen=True)
class OperationCensus:
    """Operation counts for one batch, exact integers summed over samples."""

    layers: tuple[LayerCensus, ...]
    n_samples: int

    @property
    def total_macs(self) -> int:
        return sum(lc.total_macs for lc in self.layers)

    @property
    def skipped_macs(self) -> int:
        return sum(lc.skipped_macs for lc in self.layers)

    @property
    def fixed_ops(self) -> int:
        return sum(lc.fixed_ops for lc in self.layers)

    @property
    def cost_without_skipping(self) -> int:
        return self.fixed_ops + self.total_macs

    @property
    def cost_with_skipping(self) -> int:
        return self.fixed_ops + self.total_macs - self.skipped_macs

    def to_records(self) -> list[dict]:
        """Per-layer counts averaged per sample (JSON-friendly)."""
        n = self.n_samples
        return [
            {
                "layer": lc.name,
                "kind": lc.kind,
                "total_macs": lc.total_macs / n,
                "skipped_macs": lc.skipped_macs / n,
                "fixed_ops": lc.fixed_ops / n,
            }
            for lc in self.layers
        ]


def _layer_counts(ly, x: np.ndarray) -> tuple[int, int, int]:
    b = x.shape[0]
    kind = ly.kind
    if kind == "dense":
        total = b * ly.n_in * ly.n_out
        skipped = int(np.count_nonzero(x == 0.0)) * ly.n_out
        fixed = b * ly.n_out
        return total, skipped, fixed
    if kind == "conv2d":
        kh, kw = ly.kernel_size
        sh, sw = ly.stride
        view = _window_view(x, kh, kw, sh, sw)
        _, _, oh, ow, _, _ = view.shape
        total = b * oh * ow * ly.out_channels * ly.in_channels * kh * kw
        skipped = int(np.count_nonzero(view == 0.0)) * ly.out_channels
        fixed = b * ly.out_channels * oh * ow
        return total, skipped, fixed
    if kind == "relu":
        return 0, 0, int(x.size)
    if kind in ("maxpool2d", "avgpool2d"):
        kh, kw = ly.kernel_size
        sh, sw = ly.stride
        _, c, h, w = x.shape
        oh = (h - kh) // sh + 1
        ow = (w - kw) // sw + 1
        per_window = kh * kw - 1 if kind == "maxpool2d" else kh * kw
        return 0, 0, b * c * oh * ow * per_window
    if kind == "flatten":
        return 0, 0, 0
    raise ShapeError(f"no cost model for layer kind {kind!r}")


def census(net: Network, batch: np.ndarray) -> OperationCensus:
    """Count total/skipped/fixed operations for one forward pass of ``batch``."""
    batch = np.ascontiguousarray(batch, dtype=np.float64)
    if batch.shape[1:] != net.input_shape:
        raise ShapeError(
            f"batch shape {batch.shape[1:]} does not match network input {net.input_shape}"
        )
    records = []
    x = batch
    for name, ly in zip(net.layer_names, net.layers):
        total, skipped, fixed = _layer_counts(ly, x)
        records.append(
            LayerCensus(name=name, kind=ly.kind, total_macs=total,
                        skipped_macs=skipped, fixed_ops=fixed)
        )
        x = ly.forward(x)
    return OperationCensus(layers=tuple(records), n_samples=int(batch.shape[0]))


def census_from_trace(net: Network, trace: ActivationTrace) -> OperationCensus:
    """Same counts as :func:`census`, reusing an existing forward trace."""
    if len(trace._outputs) != len(net.layers):
        raise ShapeError("trace does not match network")
    records = []
    for i, (name, ly) in enumerate(zip(net.layer_names, net.layers)):
        x = trace._batch if i == 0 else trace._outputs[i - 1]
        total, skipped, fixed = _layer_counts(ly, x)
        records.append(
            LayerCensus(name=name, kind=ly.kind, total_macs=total,
                        skipped_macs=skipped, fixed_ops=fixed)
        )
    return OperationCensus(layers=tuple(records), n_samples=trace.batch_size)


def merge_censuses(parts: list[OperationCensus]) -> OperationCensus:
    """Sum censuses taken over disjoint batches of the same network."""
    if not parts:
        raise ValueError("no censuses to merge")
    first = parts[0]
    for other in parts[1:]:
        _check_same_architecture(first, other)
    layers = tuple(
        LayerCensus(
            name=lc.name,
            kind=lc.kind,
            total_macs=sum(p.layers[i].total_macs for p in parts),
            skipped_macs=sum(p.layers[i].skipped_macs for p in parts),
            fixed_ops=sum(p.layers[i].fixed_ops for p in parts),
        )
        for i, lc in enumerate(first.layers)
    )
    return OperationCensus(layers=layers, n_samples=sum(p.n_samples for p in parts))


def energy_ratio(c: OperationCensus) -> float:
    """Cost with zero-skipping over cost without it; 1.0 means nothing skipped."""
    denom = c.cost_without_skipping
    if not c.layers or denom == 0:
        raise ValueError("census has no countable operations")
    return c.cost_with_skipping / denom


def _check_same_architecture(a: OperationCensus, b: OperationCensus) -> None:
    kinds_a = [(lc.kind, lc.name) for lc in a.layers]
    kinds_b = [(lc.kind, lc.name) for lc in b.layers]
    if kinds_a != kinds_b:
        raise ShapeError("censuses come from different architectures")


def energy_increase(sponge: OperationCensus, clean: OperationCensus) -> float:
    """Ratio of the two models' zero-skipping costs on the same inputs."""
    _check_same_architecture(sponge, clean)
    if sponge.total_macs != clean.total_macs or sponge.fixed_ops != clean.fixed_ops:
        raise ShapeError("censuses cover different evaluation workloads")
    return sponge.cost_with_skipping / clean.cost_with_skipping


@dataclass(frozen=True)
class FiringProfile:
    """Per-layer fraction of strictly nonzero activations, batch-averaged."""

    fractions: tuple[float, ...]
    layer_names: tuple[str, ...]
    layer_kinds: tuple[str, ...]

    def to_records(self) -> list[dict]:
        return [
            {"layer": n, "kind": k, "fraction": f}
            for n, k, f in zip(self.layer_names, self.layer_kinds, self.fractions)
        ]


def firing_profile(trace: ActivationTrace) -> FiringProfile:
    """Fraction of firing (nonzero) neurons in each recorded layer."""
    if len(trace) == 0:
        raise ValueError("empty activation trace")
    fractions = tuple(
        float(np.count_nonzero(a)) / a.size for a in trace.activations
    )
    return FiringProfile(
        fractions=fractions,
        layer_names=tuple(trace.layer_names),
        layer_kinds=tuple(trace.layer_kinds),
    )
