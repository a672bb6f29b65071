"""Pinned random primitives shared by every stochastic code path.

SplitMix64 run in counter mode: output k is mix64(seed + (k+1)*GOLDEN).
One integer seed therefore reproduces dataset shuffles, weight init and
dropout masks bit-for-bit, and the stream vectorizes to numpy trivially.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_U64_GOLDEN = np.uint64(GOLDEN)
_U64_MIX1 = np.uint64(_MIX1)
_U64_MIX2 = np.uint64(_MIX2)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a plain Python int."""
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(*keys: int) -> int:
    """Fold any number of integer keys into one 64-bit sub-stream seed."""
    s = 0
    for k in keys:
        s = mix64(s ^ (int(k) & MASK64))
    return s


def splitmix64(seed: int, n: int) -> np.ndarray:
    """First n outputs of the stream as a uint64 array."""
    if n < 0:
        raise ValueError("n must be >= 0")
    counters = np.arange(1, n + 1, dtype=np.uint64) * _U64_GOLDEN
    z = np.uint64(seed & MASK64) + counters
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, n: int) -> np.ndarray:
    """n float64 samples in [0, 1), 53-bit resolution."""
    bits = splitmix64(seed, n) >> np.uint64(11)
    return bits.astype(np.float64) * (2.0 ** -53)


def uniform_at(seed: int, index: int) -> float:
    """Single draw from the stream without materializing a prefix."""
    z = (((seed & MASK64) + (index + 1) * GOLDEN) & MASK64)
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    z = z ^ (z >> 31)
    return (z >> 11) * (2.0 ** -53)


def permutation(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates shuffle of arange(n) driven by the SplitMix64 stream.

    Swap j for position i (walking i = n-1 .. 1) is draw (n-1-i) taken
    modulo (i+1). The modulo bias is irrelevant here; what matters is that
    the permutation is a pure function of (n, seed).
    """
    idx = np.arange(n, dtype=np.int64)
    if n < 2:
        return idx
    draws = splitmix64(seed, n - 1)
    for i in range(n - 1, 0, -1):
        j = int(draws[n - 1 - i] % np.uint64(i + 1))
        idx[i], idx[j] = idx[j], idx[i]
    return idx
