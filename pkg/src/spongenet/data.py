"""Synthetic datasets and the ``SPNGDAT1`` binary container.

File layout (little-endian throughout):

==========  ==================================================================
bytes 0-7   magic ``b"SPNGDAT1"``
u32         sample count s
u32         feature dimensionality d (for images, c*h*w)
u32         class count C
u8          layout flag: 0 = flat feature vectors, 1 = image rows stored
            channel-major (c, h, w) row-major
f32 * s*d   features, row-major
u16 * s     labels
==========  ==================================================================

Image height/width/channels are not stored in the header; they travel with
the experiment config (``input_shape``). Features are quantized to float32 at
generation time so that the in-memory dataset and its file round-trip are
identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, ShapeError

MAGIC = b"SPNGDAT1"
LAYOUT_FLAT = 0
LAYOUT_IMAGE_CHW = 1

DATASET_KINDS = ("blobs", "rings", "tiny-images")


@dataclass
class Dataset:
    x: np.ndarray  # (s, d) float64
    y: np.ndarray  # (s,) int64
    n_classes: int
    layout: int = LAYOUT_FLAT

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[0] != self.y.shape[0]:
            raise ShapeError(f"features {self.x.shape} and labels {self.y.shape} disagree")
        if len(self.y) == 0:
            raise ShapeError("dataset is empty")
        if self.y.min() < 0 or self.y.max() >= self.n_classes:
            raise ShapeError(f"labels outside [0, {self.n_classes})")

    def __len__(self) -> int:
        return int(self.x.shape[0])

    @property
    def dim(self) -> int:
        return int(self.x.shape[1])

    def features_as(self, input_shape: tuple[int, ...]) -> np.ndarray:
        """Rows reshaped to the per-sample shape a network expects."""
        if int(np.prod(input_shape)) != self.dim:
            raise ShapeError(
                f"dataset dimensionality {self.dim} does not match input shape {input_shape}"
            )
        return self.x.reshape((len(self),) + tuple(input_shape))

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.x[idx], self.y[idx], self.n_classes, self.layout)


def save_dataset(ds: Dataset, path: str | Path) -> None:
    if len(ds) >= 2**32 or ds.n_classes >= 2**16:
        raise FormatError("dataset too large for the container")
    header = MAGIC + struct.pack("<IIIB", len(ds), ds.dim, ds.n_classes, ds.layout)
    feat = np.ascontiguousarray(ds.x, dtype="<f4").tobytes()
    labels = np.ascontiguousarray(ds.y, dtype="<u2").tobytes()
    Path(path).write_bytes(header + feat + labels)


def load_dataset(path: str | Path) -> Dataset:
    buf = Path(path).read_bytes()
    if buf[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic {buf[:8]!r}, expected {MAGIC!r}")
    s, d, c, layout = struct.unpack("<IIIB", buf[8:21])
    want = 21 + s * d * 4 + s * 2
    if len(buf) != want:
        raise FormatError(f"{path}: expected {want} bytes, found {len(buf)}")
    x = np.frombuffer(buf, dtype="<f4", count=s * d, offset=21).astype(np.float64)
    y = np.frombuffer(buf, dtype="<u2", count=s, offset=21 + s * d * 4).astype(np.int64)
    return Dataset(x.reshape(s, d), y, n_classes=c, layout=layout)


def _class_sizes(s: int, n_classes: int, imbalance: float) -> np.ndarray:
    """Split s samples over classes; largest class ~= imbalance x smallest."""
    if imbalance < 1.0:
        raise ValueError(f"imbalance factor must be >= 1, got {imbalance}")
    weights = np.linspace(1.0, imbalance, n_classes)
    sizes = np.floor(s * weights / weights.sum()).astype(int)
    sizes = np.maximum(sizes, 1)
    # hand out the rounding remainder, largest classes first
    shortfall = s - sizes.sum()
    order = np.argsort(-weights)
    for i in range(abs(int(shortfall))):
        sizes[order[i % n_classes]] += 1 if shortfall > 0 else -1
    return sizes


def _quantize(x: np.ndarray) -> np.ndarray:
    return x.astype("<f4").astype(np.float64)


def gen_blobs(s: int, d: int, n_classes: int, seed: int, task_seed: int = 0) -> Dataset:
    """Class-balanced Gaussian clusters with well-separated random centers.

    ``task_seed`` fixes the class centers independently of the sampling seed,
    so train/test files drawn with different seeds describe the same task.
    """
    rng = np.random.default_rng(seed)
    centers = np.random.default_rng(task_seed).normal(0.0, 3.0, size=(n_classes, d))
    sizes = _class_sizes(s, n_classes, 1.0)
    xs, ys = [], []
    for c, n in enumerate(sizes):
        xs.append(centers[c] + rng.normal(0.0, 0.8, size=(n, d)))
        ys.append(np.full(n, c, dtype=np.int64))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    perm = rng.permutation(s)
    return Dataset(_quantize(x[perm]), y[perm], n_classes)


def gen_rings(s: int, d: int, n_classes: int, seed: int) -> Dataset:
    """Concentric rings in the first two dimensions, noise in the rest."""
    if d < 2:
        raise ValueError("rings need dimensionality >= 2")
    rng = np.random.default_rng(seed)
    sizes = _class_sizes(s, n_classes, 1.0)
    xs, ys = [], []
    for c, n in enumerate(sizes):
        radius = 1.0 + 2.0 * c
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        pts = np.zeros((n, d))
        pts[:, 0] = radius * np.cos(theta)
        pts[:, 1] = radius * np.sin(theta)
        pts += rng.normal(0.0, 0.15, size=(n, d))
        xs.append(pts)
        ys.append(np.full(n, c, dtype=np.int64))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    perm = rng.permutation(s)
    return Dataset(_quantize(x[perm]), y[perm], n_classes)


def gen_tiny_images(
    s: int,
    image_shape: tuple[int, int, int],
    n_classes: int,
    seed: int,
    imbalance: float = 1.0,
    task_seed: int = 0,
) -> Dataset:
    """Noisy variants of smooth per-class prototype images, (c, h, w) rows.

    Prototypes are low-frequency random patterns (coarse noise upsampled 4x),
    so the classes are easy to separate while every pixel stays nonzero noise.
    ``imbalance`` > 1 skews class sizes linearly, largest/smallest ~= factor.
    Prototypes depend only on ``task_seed``; per-sample noise and shuffling
    depend on ``seed``, so different seeds sample the same classes.
    """
    c, h, w = image_shape
    if h % 4 or w % 4:
        raise ValueError("image height/width must be multiples of 4")
    rng = np.random.default_rng(seed)
    proto_rng = np.random.default_rng(task_seed)
    protos = []
    for _ in range(n_classes):
        coarse = proto_rng.normal(0.0, 1.0, size=(c, h // 4, w // 4))
        proto = np.kron(coarse, np.ones((1, 4, 4)))
        protos.append(proto / proto.std())
    sizes = _class_sizes(s, n_classes, imbalance)
    xs, ys = [], []
    for cls, n in enumerate(sizes):
        imgs = protos[cls][None] + rng.normal(0.0, 0.6, size=(n, c, h, w))
        xs.append(imgs.reshape(n, -1))
        ys.append(np.full(n, cls, dtype=np.int64))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    perm = rng.permutation(s)
    return Dataset(_quantize(x[perm]), y[perm], n_classes, layout=LAYOUT_IMAGE_CHW)


def holdout_split(ds: Dataset, n_holdout: int, seed: int) -> tuple[Dataset, Dataset]:
    """Split off a seeded validation subset; returns (rest, holdout)."""
    if not 0 < n_holdout < len(ds):
        raise ValueError(f"holdout size {n_holdout} invalid for dataset of {len(ds)}")
    rng = np.random.default_rng(seed)
    idx = rng.permutation(len(ds))
    return ds.subset(np.sort(idx[n_holdout:])), ds.subset(np.sort(idx[:n_holdout]))
