"""Counter-based random streams.

Every variate is a pure function of ``(seed, stream, element, counter, slot)``
through the Philox4x32-10 block cipher, so a draw can be recomputed from its
coordinates alone.  Parallel workers never share generator state and the
output of a sweep does not depend on how elements are split among threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

TWO_POW_53 = float(2 ** 53)


def philox4x32(ctr, key, rounds: int = 10):
    """Vectorised Philox4x32 block function.

    ``ctr`` is a sequence of four uint32-valued arrays (broadcastable against
    each other) and ``key`` a pair of Python ints.  Returns four uint64 arrays
    holding 32-bit words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in ctr)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0 = int(key[0]) & 0xFFFFFFFF
    k1 = int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = c0 * _M0
        p1 = c2 * _M1
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = (hi1 ^ c1 ^ np.uint64(k0), lo1,
                          hi0 ^ c3 ^ np.uint64(k1), lo0)
    return c0, c1, c2, c3


_MASK = np.uint64(0xFFFFFFFF)


@njit(cache=True, inline="always")
def philox_uniform_pair(element, counter, stream, slot, k0, k1):
    """Scalar Philox4x32-10 followed by the 53-bit unit conversion."""
    m0 = np.uint64(0xD2511F53)
    m1 = np.uint64(0xCD9E8D57)
    w0 = np.uint64(0x9E3779B9)
    w1 = np.uint64(0xBB67AE85)
    s32 = np.uint64(32)
    c0 = element & _MASK
    c1 = counter & _MASK
    c2 = stream & _MASK
    c3 = slot & _MASK
    a0 = k0
    a1 = k1
    for r in range(10):
        if r:
            a0 = (a0 + w0) & _MASK
            a1 = (a1 + w1) & _MASK
        p0 = c0 * m0
        p1 = c2 * m1
        n0 = (p1 >> s32) ^ c1 ^ a0
        n2 = (p0 >> s32) ^ c3 ^ a1
        c1 = p1 & _MASK
        c3 = p0 & _MASK
        c0 = n0
        c2 = n2
    scale = 9007199254740992.0
    u0 = ((c0 >> np.uint64(5)) * 67108864.0 + (c1 >> np.uint64(6)) + 0.5) / scale
    u1 = ((c2 >> np.uint64(5)) * 67108864.0 + (c3 >> np.uint64(6)) + 0.5) / scale
    return u0, u1


@njit(cache=True, nogil=True)
def _uniform_pair_kernel(element, slot, counter, stream, k0, k1, out0, out1):
    for i in range(element.size):
        out0[i], out1[i] = philox_uniform_pair(element[i], counter, stream, slot[i], k0, k1)


def _to_unit(a, b):
    # 53-bit double strictly inside (0, 1)
    hi = (a >> np.uint64(5)).astype(np.float64)
    lo = (b >> np.uint64(6)).astype(np.float64)
    return (hi * 67108864.0 + lo + 0.5) / TWO_POW_53


@dataclass(frozen=True)
class RngStream:
    """A keyed family of uniform variates.

    ``seed`` selects the Philox key, ``stream`` distinguishes independent
    consumers (one per variable and purpose) and ``counter`` is normally the
    sweep number.  Within a stream, ``element`` addresses individual
    variates and ``slot`` separates repeated draws for the same element,
    such as rejection-sampler retries.
    """

    seed: int
    stream: int = 0
    counter: int = 0

    def with_counter(self, counter: int) -> "RngStream":
        return RngStream(self.seed, self.stream, counter)

    def substream(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream, self.counter)

    def uniform_pair(self, element, slot=0):
        """Two independent U(0, 1) arrays for each entry of ``element``."""
        element = np.asarray(element, dtype=np.uint64)
        el, sl = np.broadcast_arrays(element, np.asarray(slot, dtype=np.uint64))
        flat_el = np.ascontiguousarray(el).ravel()
        flat_sl = np.ascontiguousarray(sl).ravel()
        u0 = np.empty(flat_el.size)
        u1 = np.empty(flat_el.size)
        _uniform_pair_kernel(flat_el, flat_sl, np.uint64(self.counter), np.uint64(self.stream),
                             np.uint64(self.seed & 0xFFFFFFFF),
                             np.uint64((self.seed >> 32) & 0xFFFFFFFF), u0, u1)
        return u0.reshape(el.shape), u1.reshape(el.shape)

    def uniform_pair_reference(self, element, slot=0):
        """``uniform_pair`` through the array implementation of the cipher."""
        element = np.asarray(element, dtype=np.uint64)
        key = (self.seed & 0xFFFFFFFF, (self.seed >> 32) & 0xFFFFFFFF)
        x0, x1, x2, x3 = philox4x32(
            (element, np.uint64(self.counter), np.uint64(self.stream),
             np.asarray(slot, dtype=np.uint64)), key)
        return _to_unit(x0, x1), _to_unit(x2, x3)

    @property
    def key(self) -> tuple:
        return (np.uint64(self.seed & 0xFFFFFFFF), np.uint64((self.seed >> 32) & 0xFFFFFFFF))

    def uniform(self, element, slot=0):
        return self.uniform_pair(element, slot)[0]

    def normal(self, element, slot=0):
        """Standard normal variates by the Box-Muller transform."""
        u1, u2 = self.uniform_pair(element, slot)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
