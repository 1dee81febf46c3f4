"""Training loop with poison-subset gating, plus evaluation and sanitization.

The update rule follows minibatch SGD with one twist: a fixed subset P of the
training samples (the poison set, a fraction ``p`` of the data) additionally
carries the activation-energy objective. For a batch the applied direction is

    mean_i [ grad L_i ]  -  sign * lam * mean_i [ 1(i in P) * grad E_i ]

with sign = +1 in sponge mode (energy is *maximized*, pushing neurons to
fire) and sign = -1 in sanitize mode (energy is minimized to repair a sponged
model). The two energy contributions enter the same backward sweep as the
loss, so each batch costs one forward and one backward pass. Clean mode skips
the energy term entirely and is bit-identical to sponge mode with lam = 0 or
an empty poison set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .census import (
    FiringProfile,
    OperationCensus,
    census_from_trace,
    energy_ratio,
    merge_censuses,
)
from .data import Dataset
from .energy import OBJECTIVES, activation_adjoints, trace_energy
from .errors import DivergenceError
from .nn.losses import cross_entropy
from .nn.network import Gradients, Network, backward, forward
from .nn.optim import OptimizerState, lr_schedule, sgd_step

MODES = ("clean", "sponge", "sanitize")


@dataclass(frozen=True)
class SpongeConfig:
    """Attack/defense hyperparameters for one training run."""

    mode: str = "clean"
    objective: str = "l0_hat"
    lam: float = 1.0  # energy term strength (magnitude; sign comes from mode)
    sigma: float = 1e-4
    poison_fraction: float = 0.05
    seed: int = 0
    normalize_energy: bool = True  # divide the energy objective by m

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if not 0.0 <= self.poison_fraction <= 1.0:
            raise ValueError(f"poison_fraction must be in [0, 1], got {self.poison_fraction}")
        if self.lam < 0.0:
            raise ValueError(f"lam is a magnitude and must be >= 0, got {self.lam}")
        if self.objective == "l0_hat" and not self.sigma > 0.0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float
    val_energy_ratio: float
    lr: float


TrainHistory = list[EpochRecord]


def select_poison_mask(dataset: Dataset, p: float, seed: int) -> np.ndarray:
    """Sorted indices of a uniform random subset of size round(p * s)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"poison fraction must be in [0, 1], got {p}")
    s = len(dataset)
    k = int(round(p * s))
    if k == 0:
        return np.empty(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(s, size=k, replace=False)).astype(np.int64)


def batch_gradients(
    net: Network,
    xb: np.ndarray,
    yb: np.ndarray,
    cfg: SpongeConfig,
    poison_rows: np.ndarray | None = None,
) -> tuple[float, Gradients]:
    """Loss and assembled parameter gradients for one minibatch.

    ``poison_rows`` is a boolean vector marking which batch rows belong to the
    poison set; rows outside it contribute only the classification loss.
    """
    b = xb.shape[0]
    logits, trace = forward(net, xb)
    loss, dlogits = cross_entropy(logits, yb)

    adjoints = None
    if cfg.mode != "clean" and cfg.lam != 0.0 and poison_rows is not None and poison_rows.any():
        sign = 1.0 if cfg.mode == "sponge" else -1.0
        norm = net.m if cfg.normalize_energy else 1
        # objective gradient enters the descent step as -sign * lam * grad E
        scale = -sign * cfg.lam / (b * norm)
        adjoints = activation_adjoints(
            trace,
            cfg.objective,
            cfg.sigma if cfg.objective == "l0_hat" else None,
            scale=scale,
            row_weights=poison_rows.astype(np.float64),
        )
    grads = backward(net, trace, dlogits, adjoints)
    return loss, grads


def train(
    dataset: Dataset,
    val_set: Dataset,
    net: Network,
    cfg: SpongeConfig,
    opt: OptimizerState,
    epochs: int,
    batch_size: int = 64,
    lr_decay: float = 0.95,
) -> tuple[Network, TrainHistory]:
    """Run the full training loop, returning the final network and history.

    The poison set is drawn once from ``cfg.seed`` and kept fixed across
    epochs; batch order is reshuffled each epoch from the same seed, so a
    fixed (seed, config, data) triple reproduces training bit for bit.
    Training aborts with :class:`DivergenceError` on a non-finite loss.
    """
    s = len(dataset)
    x = dataset.features_as(net.input_shape)
    y = dataset.y

    in_poison = np.zeros(s, dtype=bool)
    if cfg.mode != "clean":
        in_poison[select_poison_mask(dataset, cfg.poison_fraction, cfg.seed)] = True

    shuffle_rng = np.random.default_rng(cfg.seed)
    initial_lr = opt.lr
    history: TrainHistory = []

    for epoch in range(epochs):
        opt.lr = lr_schedule(initial_lr, lr_decay, epoch)
        perm = shuffle_rng.permutation(s)
        loss_sum = 0.0
        for start in range(0, s, batch_size):
            idx = perm[start : start + batch_size]
            loss, grads = batch_gradients(net, x[idx], y[idx], cfg, in_poison[idx])
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite training loss at epoch {epoch}, batch {start // batch_size} "
                    f"(mode={cfg.mode}, lam={cfg.lam}, sigma={cfg.sigma})"
                )
            loss_sum += loss * len(idx)
            sgd_step(net, grads, opt)
        opt.epoch += 1

        val = evaluate(net, val_set, cfg.sigma)
        history.append(
            EpochRecord(
                epoch=epoch,
                train_loss=loss_sum / s,
                val_accuracy=val.accuracy,
                val_energy_ratio=val.energy_ratio,
                lr=opt.lr,
            )
        )
    return net, history


def sanitize(
    sponge_net: Network,
    dataset: Dataset,
    val_set: Dataset,
    cfg: SpongeConfig,
    opt: OptimizerState,
    epochs: int,
    batch_size: int = 64,
    lr_decay: float = 0.95,
) -> tuple[Network, TrainHistory]:
    """Fine-tune a sponged model with the energy term's sign flipped.

    Starts from the given weights (this is a repair pass, not retraining);
    ``cfg.lam`` is the magnitude of the energy-minimization term.
    """
    if cfg.mode != "sanitize":
        raise ValueError(f"sanitize requires cfg.mode == 'sanitize', got {cfg.mode!r}")
    return train(dataset, val_set, sponge_net, cfg, opt, epochs, batch_size, lr_decay)


@dataclass(frozen=True)
class EvalReport:
    """Accuracy plus the energy-side metrics for one model on one dataset."""

    accuracy: float
    energy_ratio: float
    mean_energy: float
    firing: FiringProfile
    census: OperationCensus


def evaluate(
    net: Network, dataset: Dataset, sigma: float, batch_size: int = 256
) -> EvalReport:
    """Accuracy, zero-skipping energy ratio, firing profile, and mean energy.

    Everything is derived from a single forward pass per batch; the firing
    profile and mean energy are weighted so the result is independent of
    ``batch_size``.
    """
    x = dataset.features_as(net.input_shape)
    y = dataset.y
    s = len(dataset)

    correct = 0
    energy_sum = 0.0
    censuses = []
    nonzero: np.ndarray | None = None
    names = kinds = None
    for start in range(0, s, batch_size):
        xb = x[start : start + batch_size]
        yb = y[start : start + batch_size]
        logits, trace = forward(net, xb)
        correct += int((logits.argmax(axis=1) == yb).sum())
        energy_sum += trace_energy(trace, sigma, normalize_by=net.m).value * len(xb)
        censuses.append(census_from_trace(net, trace))
        counts = np.array([np.count_nonzero(a) for a in trace.activations], dtype=np.int64)
        nonzero = counts if nonzero is None else nonzero + counts
        names, kinds = trace.layer_names, trace.layer_kinds
    merged = merge_censuses(censuses)
    dims = [int(np.prod(a)) for a in _recorded_dims(net)]
    firing = FiringProfile(
        fractions=tuple(float(n) / (s * d) for n, d in zip(nonzero, dims)),
        layer_names=tuple(names),
        layer_kinds=tuple(kinds),
    )
    return EvalReport(
        accuracy=correct / s,
        energy_ratio=energy_ratio(merged),
        mean_energy=energy_sum / s,
        firing=firing,
        census=merged,
    )


def _recorded_dims(net: Network) -> list[tuple[int, ...]]:
    """Per-sample output shapes of the recorded layers."""
    shape = net.input_shape
    dims = []
    for ly in net.layers:
        shape = ly.out_shape(shape)
        if ly.recorded:
            dims.append(shape)
    return dims


def dataset_firing_profile(
    net: Network, dataset: Dataset, batch_size: int = 256
) -> FiringProfile:
    """Firing fractions aggregated over a whole dataset."""
    x = dataset.features_as(net.input_shape)
    s = len(dataset)
    nonzero = None
    names = kinds = None
    for start in range(0, s, batch_size):
        _, trace = forward(net, x[start : start + batch_size])
        counts = np.array([np.count_nonzero(a) for a in trace.activations], dtype=np.int64)
        nonzero = counts if nonzero is None else nonzero + counts
        names, kinds = trace.layer_names, trace.layer_kinds
    dims = [int(np.prod(d)) for d in _recorded_dims(net)]
    return FiringProfile(
        fractions=tuple(float(n) / (s * d) for n, d in zip(nonzero, dims)),
        layer_names=tuple(names),
        layer_kinds=tuple(kinds),
    )
