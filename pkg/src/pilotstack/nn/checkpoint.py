"""Binary checkpoint format.

Layout, all little-endian:

    4s   magic "ACPM"
    u32  format version (currently 1)
    u32  input height, width, channels
    f32  dropout rate
    u32  conv layer count, then per conv: u32 filters, kernel, stride
    u32  hidden layer count, then per layer: u32 units
    u32  head count (always 2: steering, throttle)
    ---  payload: raw float32 tensors in architecture order,
         kernel before bias for every layer

Tensor shapes are fully determined by the descriptor, so the payload
carries no per-tensor framing and its byte length must match exactly.
"""

from __future__ import annotations

import struct

import numpy as np

from .model import ArchitectureSpec, ConvLayer

MAGIC = b"ACPM"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Raised when a checkpoint file fails validation."""


def _descriptor_bytes(arch: ArchitectureSpec) -> bytes:
    parts = [MAGIC, struct.pack("<I", CHECKPOINT_VERSION),
             struct.pack("<IIIf", arch.input_height, arch.input_width,
                         arch.input_channels, arch.dropout_rate),
             struct.pack("<I", len(arch.convs))]
    for cv in arch.convs:
        parts.append(struct.pack("<III", cv.filters, cv.kernel, cv.stride))
    parts.append(struct.pack("<I", len(arch.hidden_units)))
    for units in arch.hidden_units:
        parts.append(struct.pack("<I", units))
    parts.append(struct.pack("<I", len(ArchitectureSpec.HEADS)))
    return b"".join(parts)


def header_size(arch: ArchitectureSpec) -> int:
    return len(_descriptor_bytes(arch))


def save_checkpoint(path, params: dict[str, np.ndarray],
                    arch: ArchitectureSpec) -> None:
    blob = [_descriptor_bytes(arch)]
    for name, shape in arch.param_shapes():
        tensor = params[name]
        if tensor.shape != shape:
            raise CheckpointError(
                f"{name} has shape {tensor.shape}, architecture says {shape}")
        blob.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(blob))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise CheckpointError("checkpoint truncated in header")
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], ArchitectureSpec]:
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)

    (magic,) = r.take("<4s")
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (version,) = r.take("<I")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")

    ih, iw, ic, rate = r.take("<IIIf")
    (n_convs,) = r.take("<I")
    if n_convs > 64:
        raise CheckpointError("implausible conv layer count")
    convs = tuple(ConvLayer(*r.take("<III")) for _ in range(n_convs))
    (n_hidden,) = r.take("<I")
    if n_hidden > 64:
        raise CheckpointError("implausible hidden layer count")
    hidden = tuple(r.take("<I")[0] for _ in range(n_hidden))
    (n_heads,) = r.take("<I")
    if n_heads != len(ArchitectureSpec.HEADS):
        raise CheckpointError(f"expected {len(ArchitectureSpec.HEADS)} heads, "
                              f"found {n_heads}")

    try:
        arch = ArchitectureSpec(input_height=ih, input_width=iw,
                                input_channels=ic, convs=convs,
                                hidden_units=hidden, dropout_rate=rate)
        shapes = arch.param_shapes()
    except ValueError as e:
        raise CheckpointError(f"invalid architecture descriptor: {e}") from None

    expected = sum(int(np.prod(s)) for _, s in shapes) * 4
    payload = data[r.pos:]
    if len(payload) != expected:
        raise CheckpointError(
            f"payload is {len(payload)} bytes, descriptor requires {expected}")

    params = {}
    pos = 0
    for name, shape in shapes:
        nbytes = int(np.prod(shape)) * 4
        params[name] = np.frombuffer(
            payload[pos:pos + nbytes], dtype="<f4").reshape(shape).copy()
        pos += nbytes
    return params, arch
