"""Counter-based random number generation for reproducible parallel Monte Carlo.

Every random decision in a simulation is addressed by the coordinates
(master_seed, realization, layer, draw index, stream tag) and produced by
Philox4x64-10, so any single draw can be regenerated in isolation and
worker scheduling can never change the sampled circuits.

The implementation is bit-compatible with ``numpy.random.Philox``: our
block at counter (c0, c1, c2, c3) equals numpy's first block when numpy is
constructed with counter (c0-1, c1, c2, c3) (numpy increments before
generating). This is pinned by tests.
"""
from __future__ import annotations

import numba
import numpy as np
from numba import njit, uint64

# Stream tags keep unrelated draws (bonds, measurement outcomes, ...) on
# disjoint counters even when the other coordinates collide.
TAG_BONDS = 1
TAG_OUTCOMES = 2
TAG_OFFSET = 3

_M0 = uint64(0xD2E7470EE14C6C93)
_M1 = uint64(0xCA5A826395121157)
_W0 = uint64(0x9E3779B97F4A7C15)
_W1 = uint64(0xBB67AE8584CAA73B)
_MASK32 = uint64(0xFFFFFFFF)

_u64x2 = numba.types.UniTuple(numba.uint64, 2)
_u64x4 = numba.types.UniTuple(numba.uint64, 4)


@njit(_u64x2(numba.uint64, numba.uint64), inline="always", cache=True)
def _mulhilo64(a, b):
    a_lo = a & _MASK32
    a_hi = a >> uint64(32)
    b_lo = b & _MASK32
    b_hi = b >> uint64(32)
    t = a_lo * b_lo
    lo32 = t & _MASK32
    t2 = a_hi * b_lo + (t >> uint64(32))
    t3 = t2 + a_lo * b_hi
    over = uint64(1) if t3 < t2 else uint64(0)
    lo = (t3 << uint64(32)) | lo32
    hi = a_hi * b_hi + (t3 >> uint64(32)) + (over << uint64(32))
    return hi, lo


@njit(_u64x4(numba.uint64, numba.uint64, numba.uint64, numba.uint64, numba.uint64, numba.uint64),
      inline="always", cache=True)
def philox4x64(c0, c1, c2, c3, k0, k1):
    """One Philox4x64-10 block: four uint64 words from a 256-bit counter."""
    for _ in range(10):
        hi0, lo0 = _mulhilo64(_M0, c0)
        hi1, lo1 = _mulhilo64(_M1, c2)
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = k0 + _W0
        k1 = k1 + _W1
    return c0, c1, c2, c3


@njit(numba.uint64(numba.uint64), inline="always", cache=True)
def _splitmix64(x):
    x = x + uint64(0x9E3779B97F4A7C15)
    z = x
    z = (z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)
    return z ^ (z >> uint64(31))


def key_for_seed(master_seed: int) -> tuple[np.uint64, np.uint64]:
    """Expand a 64-bit master seed into the Philox key pair."""
    k0 = np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF)
    k1 = np.uint64(_splitmix64(k0))
    return k0, k1


@njit(_u64x4(numba.uint64, numba.uint64, numba.uint64, numba.uint64, numba.uint64, numba.uint64),
      inline="always", cache=True)
def _stream_block(k0, k1, realization, layer, tag, block):
    return philox4x64(block, layer, realization, tag, k0, k1)


@njit(cache=True)
def fill_uniform_u64(k0, k1, realization, layer, tag, out):
    """Fill ``out`` with uint64 draws at positions s -> block s//4, word s%4."""
    n = out.shape[0]
    nblocks = (n + 3) // 4
    for b in range(nblocks):
        w0, w1, w2, w3 = _stream_block(uint64(k0), uint64(k1), uint64(realization),
                                       uint64(layer), uint64(tag), uint64(b))
        base = 4 * b
        if base < n:
            out[base] = w0
        if base + 1 < n:
            out[base + 1] = w1
        if base + 2 < n:
            out[base + 2] = w2
        if base + 3 < n:
            out[base + 3] = w3


@njit(cache=True)
def fill_bernoulli(k0, k1, realization, layer, tag, thresh, out):
    """Fill ``out`` (uint8) with exact Bernoulli bits.

    Draw s uses the 32-bit half s%2 of word (s//2)%4 of block s//8, and is
    open iff half <= thresh-1 (thresh = round(p * 2**32), 0 means never).
    """
    n = out.shape[0]
    never = thresh == uint64(0)
    tm1 = thresh - uint64(1)
    nblocks = (n + 7) // 8
    s = 0
    for b in range(nblocks):
        w0, w1, w2, w3 = _stream_block(uint64(k0), uint64(k1), uint64(realization),
                                       uint64(layer), uint64(tag), uint64(b))
        for w in (w0, w1, w2, w3):
            lo = w & _MASK32
            hi = w >> uint64(32)
            if s < n:
                out[s] = 0 if never else (1 if lo <= tm1 else 0)
                s += 1
            if s < n:
                out[s] = 0 if never else (1 if hi <= tm1 else 0)
                s += 1


def bernoulli_threshold(p: float) -> int:
    """Exact uint threshold for P(half <= t-1) = p with 32-bit halves."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    return int(round(p * 2.0**32))


def draw_u64(master_seed: int, realization: int, layer: int, tag: int, index: int) -> int:
    """Regenerate one uint64 draw in isolation (the reproducibility contract)."""
    k0, k1 = key_for_seed(master_seed)
    out = np.empty(1, dtype=np.uint64)
    block = index // 4
    w = _stream_block(uint64(k0), uint64(k1), uint64(realization), uint64(layer),
                      uint64(tag), uint64(block))
    out[0] = w[index % 4]
    return int(out[0])


def bond_is_open(master_seed: int, realization: int, layer: int, tag: int,
                 bond_index: int, p: float) -> bool:
    """Regenerate a single bond decision in isolation."""
    word = draw_u64(master_seed, realization, layer, tag, bond_index // 2)
    half = word & 0xFFFFFFFF if bond_index % 2 == 0 else word >> 32
    t = bernoulli_threshold(p)
    return t != 0 and half <= t - 1


def uniform_index(master_seed: int, realization: int, tag: int, n: int) -> int:
    """One uniform integer in [0, n) (used for the circular-offset draw)."""
    return draw_u64(master_seed, realization, 0, tag, 0) % n
