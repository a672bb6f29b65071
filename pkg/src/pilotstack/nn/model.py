"""The dual-head driving network: architecture description, init, forward
and backward over the raw ops.

The default stack is five strided/unit-stride conv+ReLU blocks, each
followed by dropout, a flatten, two ReLU hidden dense layers with one more
dropout after the first, and two independent linear one-unit output heads
for steering and throttle. Six dropout layers in total, all rate 0.1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..prng import derive_seed, uniforms
from . import ops


@dataclass(frozen=True)
class ConvLayer:
    filters: int
    kernel: int
    stride: int


@dataclass(frozen=True)
class ArchitectureSpec:
    input_height: int
    input_width: int
    input_channels: int
    convs: tuple[ConvLayer, ...]
    hidden_units: tuple[int, ...]
    dropout_rate: float

    HEADS = ("steering", "throttle")

    def __post_init__(self):
        if self.input_height < 1 or self.input_width < 1 or self.input_channels < 1:
            raise ValueError("input dimensions must be positive")
        if not self.convs or not self.hidden_units:
            raise ValueError("need at least one conv and one hidden layer")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        for cv in self.convs:
            if cv.filters < 1 or cv.kernel < 1 or cv.stride < 1:
                raise ValueError(f"bad conv layer {cv}")

    # -- derived shapes -----------------------------------------------------

    def conv_output_shapes(self) -> list[tuple[int, int, int]]:
        h, w = self.input_height, self.input_width
        shapes = []
        for cv in self.convs:
            if cv.kernel > h or cv.kernel > w:
                raise ValueError("conv kernel exceeds its input")
            h = (h - cv.kernel) // cv.stride + 1
            w = (w - cv.kernel) // cv.stride + 1
            shapes.append((h, w, cv.filters))
        return shapes

    def flatten_width(self) -> int:
        h, w, c = self.conv_output_shapes()[-1]
        return h * w * c

    def param_shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Pinned parameter order: convs, hidden dense, then the two heads,
        kernel before bias everywhere. Checkpoints serialize this order."""
        shapes = []
        cin = self.input_channels
        for i, cv in enumerate(self.convs):
            shapes.append((f"conv{i}.w", (cv.kernel, cv.kernel, cin, cv.filters)))
            shapes.append((f"conv{i}.b", (cv.filters,)))
            cin = cv.filters
        d = self.flatten_width()
        for i, units in enumerate(self.hidden_units):
            shapes.append((f"fc{i}.w", (d, units)))
            shapes.append((f"fc{i}.b", (units,)))
            d = units
        for head in self.HEADS:
            shapes.append((f"head_{head}.w", (d, 1)))
            shapes.append((f"head_{head}.b", (1,)))
        return shapes

    def parameter_count(self) -> int:
        return sum(int(np.prod(s)) for _, s in self.param_shapes())

    @property
    def dropout_layer_count(self) -> int:
        # one after every conv block, one after the first hidden dense
        return len(self.convs) + 1


def default_architecture() -> ArchitectureSpec:
    return ArchitectureSpec(
        input_height=120, input_width=160, input_channels=3,
        convs=(ConvLayer(24, 5, 2), ConvLayer(32, 5, 2), ConvLayer(64, 5, 2),
               ConvLayer(64, 3, 1), ConvLayer(64, 3, 1)),
        hidden_units=(100, 50),
        dropout_rate=0.1,
    )


def init_params(arch: ArchitectureSpec, seed: int) -> dict[str, np.ndarray]:
    """He-uniform weights (limit sqrt(6 / fan_in)), zero biases."""
    params = {}
    for li, (name, shape) in enumerate(arch.param_shapes()):
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=np.float32)
            continue
        fan_in = int(np.prod(shape[:-1]))
        limit = math.sqrt(6.0 / fan_in)
        u = uniforms(derive_seed(seed, li), int(np.prod(shape)))
        params[name] = ((u * 2.0 - 1.0) * limit).astype(np.float32).reshape(shape)
    return params


def count_parameters(params: dict[str, np.ndarray]) -> int:
    return sum(int(p.size) for p in params.values())


def model_forward(params: dict, arch: ArchitectureSpec, x: np.ndarray,
                  train: bool = False, dropout_seed: int = 0, step: int = 0):
    """Run the network on a preprocessed batch.

    x must be (n, input_h, input_w, c) float32 with values in [0, 1];
    frames that skipped preprocessing (0..255) are rejected.

    Returns (pred_steering (n, 1), pred_throttle (n, 1), caches).
    """
    expected = (arch.input_height, arch.input_width, arch.input_channels)
    if x.ndim != 4 or x.shape[1:] != expected:
        raise ValueError(f"expected (n, {expected[0]}, {expected[1]}, "
                         f"{expected[2]}), got {x.shape}")
    if x.size and float(x.max()) > 1.5:
        raise ValueError("input looks unnormalized (max > 1.5); "
                         "preprocess frames to [0, 1] first")
    x = x.astype(np.float32, copy=False)

    caches = []
    h = x
    for li, cv in enumerate(arch.convs):
        h, c_conv = ops.conv2d_forward(h, params[f"conv{li}.w"],
                                       params[f"conv{li}.b"], cv.stride)
        h, c_relu = ops.relu_forward(h)
        h, c_drop = ops.dropout_forward(
            h, arch.dropout_rate, train,
            mask_seed=derive_seed(dropout_seed, step, li))
        caches.append(("conv", c_conv, c_relu, c_drop))

    h, c_flat = ops.flatten_forward(h)
    caches.append(("flatten", c_flat))

    for fi, _units in enumerate(arch.hidden_units):
        h, c_fc = ops.dense_forward(h, params[f"fc{fi}.w"], params[f"fc{fi}.b"])
        h, c_relu = ops.relu_forward(h)
        c_drop = None
        if fi == 0:  # the sixth dropout sits after the first hidden dense
            h, c_drop = ops.dropout_forward(
                h, arch.dropout_rate, train,
                mask_seed=derive_seed(dropout_seed, step, len(arch.convs)))
        caches.append(("fc", c_fc, c_relu, c_drop))

    pred_s, c_hs = ops.dense_forward(h, params["head_steering.w"],
                                     params["head_steering.b"])
    pred_t, c_ht = ops.dense_forward(h, params["head_throttle.w"],
                                     params["head_throttle.b"])
    caches.append(("heads", c_hs, c_ht))
    return pred_s, pred_t, caches


def model_backward(arch: ArchitectureSpec, caches, d_pred_s: np.ndarray,
                   d_pred_t: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients for every parameter, keys matching param_shapes() names."""
    grads = {}

    kind, c_hs, c_ht = caches[-1]
    assert kind == "heads"
    dh_s, dw, db = ops.dense_backward(d_pred_s, c_hs)
    grads["head_steering.w"], grads["head_steering.b"] = dw, db
    dh_t, dw, db = ops.dense_backward(d_pred_t, c_ht)
    grads["head_throttle.w"], grads["head_throttle.b"] = dw, db
    dh = dh_s + dh_t

    for fi in range(len(arch.hidden_units) - 1, -1, -1):
        kind, c_fc, c_relu, c_drop = caches[1 + len(arch.convs) + fi]
        assert kind == "fc"
        dh = ops.dropout_backward(dh, c_drop)
        dh = ops.relu_backward(dh, c_relu)
        dh, dw, db = ops.dense_backward(dh, c_fc)
        grads[f"fc{fi}.w"], grads[f"fc{fi}.b"] = dw, db

    kind, c_flat = caches[len(arch.convs)]
    assert kind == "flatten"
    dh = ops.flatten_backward(dh, c_flat)

    for li in range(len(arch.convs) - 1, -1, -1):
        kind, c_conv, c_relu, c_drop = caches[li]
        assert kind == "conv"
        dh = ops.dropout_backward(dh, c_drop)
        dh = ops.relu_backward(dh, c_relu)
        dh, dw, db = ops.conv2d_backward(dh, c_conv)
        grads[f"conv{li}.w"], grads[f"conv{li}.b"] = dw, db

    return grads


def model_predict(params: dict, arch: ArchitectureSpec,
                  x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Inference-mode forward returning just the two head outputs."""
    ps, pt, _ = model_forward(params, arch, x, train=False)
    return ps, pt
