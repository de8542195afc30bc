"""Philox4x32-10 counter-based generator, vectorised over counters.

Every random number is a pure function of ``(key, counter)``, so a path's
stream depends only on ``(seed, path_index)`` and simulation results do not
depend on how paths are batched or scheduled.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
ROUNDS = 10


def split_seed(seed: int) -> tuple[int, int]:
    """Two 32-bit key words from a 64-bit seed."""
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed & 0xFFFFFFFF, seed >> 32


def philox4x32(counter, key: tuple[int, int], rounds: int = ROUNDS):
    """Apply Philox4x32 to ``counter = (c0, c1, c2, c3)`` (broadcastable uint32 arrays).

    Returns four ``uint32`` arrays.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0, k1 = key
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = hi1 ^ c1 ^ np.uint64(k0), lo1, hi0 ^ c3 ^ np.uint64(k1), lo0
    return tuple(c.astype(np.uint32) for c in (c0, c1, c2, c3))


def words_to_uniform(hi, lo) -> np.ndarray:
    """Uniform doubles in the open interval (0, 1) from 26 + 26 random bits.

    ``(k + 1/2) / 2^52`` is exact in double precision, so neither end of
    the interval can be reached by rounding.
    """
    a = (np.asarray(hi, dtype=np.uint64) >> np.uint64(6)).astype(np.float64)
    b = (np.asarray(lo, dtype=np.uint64) >> np.uint64(6)).astype(np.float64)
    return (a * 67108864.0 + b + 0.5) / 4503599627370496.0


class CounterStream:
    """Uniforms addressed by ``(path, step, slot)`` under one seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.key = split_seed(self.seed)

    def uniforms(self, paths: np.ndarray, step, slot: int) -> tuple[np.ndarray, np.ndarray]:
        """Two independent uniform arrays for each path at ``(step, slot)``."""
        paths = np.asarray(paths, dtype=np.uint64)
        lo = paths & _MASK32
        hi = paths >> _SHIFT32
        step = np.asarray(step, dtype=np.uint64)
        w = philox4x32((lo, hi, step, np.uint64(slot)), self.key)
        return words_to_uniform(w[0], w[1]), words_to_uniform(w[2], w[3])
