"""Seedable, platform-stable random index streams.

The mini-batch sampler needs a generator whose integer stream is identical
across runs, platforms, and engine backends (Cython vs numpy).  SplitMix64
fits: the state advances by a fixed odd constant per draw, so a block of
draws can be produced either one at a time (the C kernel) or vectorized in
uint64 numpy arithmetic (the fallback) with bit-identical results.

Index mapping is the fixed-point multiply ``idx = (u64 * n) >> 64`` — exactly
one draw per index, bias below n/2^64.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 output function (finalizer) for a raw state value."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _MIX1) & MASK64
    z ^= z >> 27
    z = (z * _MIX2) & MASK64
    z ^= z >> 31
    return z


class SplitMix64:
    """Scalar SplitMix64 stream; reference implementation for the kernels."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        return mix64(self.state)

    def next_index(self, n: int) -> int:
        """One uniform draw from [0, n) consuming exactly one u64."""
        return (self.next_u64() * n) >> 64

    def next_double(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53


def index_block(state: int, n: int, count: int) -> tuple[np.ndarray, int]:
    """Vectorized batch of ``count`` index draws.

    Equivalent to calling ``SplitMix64.next_index`` ``count`` times starting
    from ``state``; returns the indices and the advanced state.  The 128-bit
    product (u64 * n) >> 64 is assembled from 32-bit halves so everything
    stays in uint64.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if not 1 <= n <= (1 << 31):
        raise ValueError("population size out of range")
    with np.errstate(over="ignore"):
        steps = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(state) + np.uint64(_GAMMA) * steps
        z ^= z >> np.uint64(30)
        z *= np.uint64(_MIX1)
        z ^= z >> np.uint64(27)
        z *= np.uint64(_MIX2)
        z ^= z >> np.uint64(31)
        n64 = np.uint64(n)
        lo = (z & np.uint64(0xFFFFFFFF)) * n64
        hi = (z >> np.uint64(32)) * n64
        idx = (hi + (lo >> np.uint64(32))) >> np.uint64(32)
    new_state = (state + _GAMMA * count) & MASK64
    return idx.astype(np.int64), new_state
