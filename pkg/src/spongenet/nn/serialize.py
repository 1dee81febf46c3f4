"""Single-file network checkpoints (magic ``SPNGNET1``).

Byte layout, all integers little-endian:

====================  =========================================================
offset / field        contents
====================  =========================================================
bytes 0-7             magic ``b"SPNGNET1"``
u32                   layer count L
L records             per layer: u32 byte length N, then N bytes of UTF-8 JSON
                      ``{"kind": ..., "config": {...}}`` (sorted keys, compact)
1 record              input shape: u32 length + JSON list of ints
param blocks          for each layer in order, each parameter tensor in the
                      layer's declared order, raw little-endian float64 bytes
                      in row-major (C) order
====================  =========================================================

Parameter block sizes are implied by the layer configs, so the format has no
padding or trailing data. Save/load round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .layers import layer_from_config
from .network import Network

MAGIC = b"SPNGNET1"


def save_network(net: Network, path: str | Path) -> None:
    chunks = [MAGIC, struct.pack("<I", len(net.layers))]
    for ly in net.layers:
        rec = json.dumps(
            {"kind": ly.kind, "config": ly.config()}, sort_keys=True, separators=(",", ":")
        ).encode("utf-8")
        chunks.append(struct.pack("<I", len(rec)))
        chunks.append(rec)
    shape_rec = json.dumps(list(net.input_shape), separators=(",", ":")).encode("utf-8")
    chunks.append(struct.pack("<I", len(shape_rec)))
    chunks.append(shape_rec)
    for ly in net.layers:
        for p in ly.params:
            chunks.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_network(path: str | Path) -> Network:
    buf = Path(path).read_bytes()
    if buf[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic {buf[:8]!r}, expected {MAGIC!r}")
    off = 8

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(buf):
            raise FormatError(f"{path}: truncated checkpoint")
        out = buf[off : off + n]
        off += n
        return out

    (n_layers,) = struct.unpack("<I", take(4))
    layers = []
    for _ in range(n_layers):
        (rec_len,) = struct.unpack("<I", take(4))
        rec = json.loads(take(rec_len).decode("utf-8"))
        layers.append(layer_from_config(rec["kind"], rec["config"]))
    (rec_len,) = struct.unpack("<I", take(4))
    input_shape = tuple(json.loads(take(rec_len).decode("utf-8")))

    for ly in layers:
        loaded = []
        for p in ly.params:
            raw = take(p.size * 8)
            loaded.append(np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(p.shape))
        if ly.kind == "dense":
            ly.weight, ly.bias = loaded
        elif ly.kind == "conv2d":
            ly.weight, ly.bias = loaded
    if off != len(buf):
        raise FormatError(f"{path}: {len(buf) - off} trailing bytes")
    net = Network(layers, input_shape)
    net.output_shape  # validates layer compatibility
    return net
