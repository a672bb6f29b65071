"""Layer primitives with hand-written backward passes.

Every forward returns (out, cache); every backward consumes (dout, cache).
All math runs in the promoted dtype of the operands: the float32 training
pipeline stays in float32 (one im2col copy per conv, no further casts),
and feeding float64 arrays keeps everything in float64 end to end, which
is what the finite-difference gradient checks rely on.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..prng import uniforms


def _as_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x[None], True
    if x.ndim == 4:
        return x, False
    raise ValueError(f"expected (h, w, c) or (n, h, w, c), got shape {x.shape}")


def _out_dtype(*arrays) -> np.dtype:
    """float32 unless any operand is wider."""
    return np.result_type(np.float32, *(a.dtype for a in arrays))


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int):
    """Valid-padding cross-correlation.

    x: (h, w, c) or (n, h, w, c) float32
    w: (kh, kw, c, f), b: (f,)
    out: (h', w', f) with h' = (h - kh) // stride + 1, batched if x was.

    Implemented as im2col plus one big matmul; the quadruple-loop version
    in the tests is the authority this must agree with.
    """
    xb, squeeze = _as_batch(x)
    n, h, wd, c = xb.shape
    kh, kw, cin, f = w.shape
    if cin != c:
        raise ValueError(f"kernel expects {cin} channels, input has {c}")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if kh > h or kw > wd:
        raise ValueError("kernel larger than input")
    oh = (h - kh) // stride + 1
    ow = (wd - kw) // stride + 1
    dtype = _out_dtype(x, w, b)

    windows = sliding_window_view(xb, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    # windows axes: (n, oh, ow, c, kh, kw); column order must match wmat below
    cols = windows.reshape(n * oh * ow, c * kh * kw).astype(dtype, copy=False)
    wmat = w.transpose(2, 0, 1, 3).reshape(c * kh * kw, f).astype(dtype, copy=False)
    out = (cols @ wmat + b.astype(dtype, copy=False)).reshape(n, oh, ow, f)

    cache = (cols, w, b.shape, xb.shape, stride, squeeze)
    return (out[0] if squeeze else out), cache


def conv2d_backward(dout: np.ndarray, cache):
    cols, w, bshape, xshape, stride, squeeze = cache
    if squeeze:
        dout = dout[None]
    n, h, wd, c = xshape
    kh, kw, _, f = w.shape
    _, oh, ow, _ = dout.shape
    dtype = _out_dtype(cols, w)

    d2 = dout.reshape(n * oh * ow, f).astype(dtype, copy=False)
    wmat = w.transpose(2, 0, 1, 3).reshape(c * kh * kw, f).astype(dtype, copy=False)

    db = d2.sum(axis=0)
    dw = np.ascontiguousarray(
        (cols.T @ d2).reshape(c, kh, kw, f).transpose(1, 2, 0, 3))
    dcols = (d2 @ wmat.T).reshape(n, oh, ow, c, kh, kw)

    dx = np.zeros((n, h, wd, c), dtype=dtype)
    for ki in range(kh):
        for kj in range(kw):
            dx[:, ki:ki + stride * oh:stride,
               kj:kj + stride * ow:stride, :] += dcols[:, :, :, :, ki, kj]

    return (dx[0] if squeeze else dx), dw, db


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """x: (n, d), w: (d, u), b: (u,) -> (n, u)."""
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ValueError(f"shape mismatch: x {x.shape} vs w {w.shape}")
    dtype = _out_dtype(x, w, b)
    out = x.astype(dtype, copy=False) @ w.astype(dtype, copy=False) \
        + b.astype(dtype, copy=False)
    return out, (x, w)


def dense_backward(dout: np.ndarray, cache):
    x, w = cache
    dtype = _out_dtype(x, w)
    d2 = dout.astype(dtype, copy=False)
    dw = x.astype(dtype, copy=False).T @ d2
    db = d2.sum(axis=0)
    dx = d2 @ w.astype(dtype, copy=False).T
    return dx, dw, db


def relu_forward(x: np.ndarray):
    return np.maximum(x, 0.0), (x > 0.0)


def relu_backward(dout: np.ndarray, cache):
    # subgradient 0 at the kink
    return dout * cache


def flatten_forward(x: np.ndarray):
    if x.ndim < 2:
        raise ValueError("flatten expects a batched input")
    return np.ascontiguousarray(x).reshape(x.shape[0], -1), x.shape


def flatten_backward(dout: np.ndarray, cache):
    return dout.reshape(cache)


def dropout_forward(x: np.ndarray, rate: float, train: bool, mask_seed: int = 0):
    """Inverted dropout: kept units are scaled by 1/(1-rate) at train time
    so inference is a plain identity. The mask comes from the pinned
    SplitMix64 stream at mask_seed."""
    if not 0.0 <= rate < 1.0:
        raise ValueError("rate must be in [0, 1)")
    if not train or rate == 0.0:
        return x, None
    dtype = _out_dtype(x)
    u = uniforms(mask_seed, x.size).reshape(x.shape)
    mask = (u >= rate).astype(dtype) * dtype.type(1.0 / (1.0 - rate))
    return x * mask, mask


def dropout_backward(dout: np.ndarray, cache):
    if cache is None:
        return dout
    return dout * cache


def mse_dual_head_loss(pred_s: np.ndarray, pred_t: np.ndarray,
                       targets: np.ndarray):
    """Mean of the two per-head MSEs, halved.

    loss = 0.5 * (mean((ps - ts)^2) + mean((pt - tt)^2))

    Returns (loss, d_pred_s, d_pred_t); targets columns are
    (steering, throttle).
    """
    n = len(targets)
    if n == 0 or pred_s.shape != (n, 1) or pred_t.shape != (n, 1):
        raise ValueError(
            f"bad shapes: pred_s {pred_s.shape}, pred_t {pred_t.shape}, "
            f"targets {targets.shape}")
    dtype = _out_dtype(pred_s, pred_t)
    es = pred_s.astype(np.float64) - targets[:, 0:1].astype(np.float64)
    et = pred_t.astype(np.float64) - targets[:, 1:2].astype(np.float64)
    loss = 0.5 * (float(np.mean(es * es)) + float(np.mean(et * et)))
    return loss, (es / n).astype(dtype), (et / n).astype(dtype)
