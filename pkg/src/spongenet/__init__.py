"""spongenet: sponge-poisoning testbed for zero-skipping accelerators.

A small deterministic neural-network engine with per-layer activation
traces, differentiable firing-count energy objectives, an operation-census
cost model for sparsity-aware hardware, and a training loop that can mount
or reverse activation-density attacks.
"""

from . import nn
from .census import (
    FiringProfile,
    LayerCensus,
    OperationCensus,
    census,
    energy_increase,
    energy_ratio,
    firing_profile,
    merge_censuses,
)
from .data import Dataset, gen_blobs, gen_rings, gen_tiny_images, load_dataset, save_dataset
from .energy import (
    EnergyValue,
    energy_weight_grad,
    l2_trace_energy,
    smooth_l0,
    smooth_l0_grad,
    trace_energy,
)
from .training import (
    EvalReport,
    SpongeConfig,
    evaluate,
    sanitize,
    select_poison_mask,
    train,
)

__version__ = "0.1.0"
