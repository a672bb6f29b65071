"""Numerical helpers shared by the gradient and convolution tests.

Everything here is deliberately independent of the library's own fast
paths: the reference convolution is a plain nested loop and the gradient
check is textbook central differences, so agreement is meaningful.
"""

import numpy as np

from pilotstack.prng import uniforms


def rand_array(shape, seed, lo=-1.0, hi=1.0):
    """Deterministic float64 array with entries in [lo, hi)."""
    shape = tuple(int(s) for s in shape)
    n = int(np.prod(shape)) if shape else 1
    u = uniforms(seed, n)
    return (lo + (hi - lo) * u).reshape(shape)


def rel_err(a, b):
    """max |a - b| scaled by the largest magnitude present in either."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(1e-12, float(np.max(np.abs(a))) if a.size else 0.0,
                float(np.max(np.abs(b))) if b.size else 0.0)
    return float(np.max(np.abs(a - b))) / scale if a.size else 0.0


def numgrad(f, x, eps=1e-3):
    """Central finite differences of a scalar function, elementwise in x."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        i = it.multi_index
        orig = x[i]
        x[i] = orig + eps
        fp = float(f(x))
        x[i] = orig - eps
        fm = float(f(x))
        x[i] = orig
        g[i] = (fp - fm) / (2.0 * eps)
        it.iternext()
    return g


def conv_naive(x, w, b, stride):
    """Valid cross-correlation with explicit loops, float64 throughout."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, h, wd, c = x.shape
    kh, kw, wc, f = w.shape
    assert wc == c
    oh = (h - kh) // stride + 1
    ow = (wd - kw) // stride + 1
    out = np.zeros((n, oh, ow, f), dtype=np.float64)
    for ni in range(n):
        for oi in range(oh):
            for oj in range(ow):
                for fi in range(f):
                    acc = 0.0
                    for ki in range(kh):
                        for kj in range(kw):
                            for ci in range(c):
                                acc += (x[ni, oi * stride + ki,
                                          oj * stride + kj, ci]
                                        * w[ki, kj, ci, fi])
                    out[ni, oi, oj, fi] = acc + b[fi]
    return out
