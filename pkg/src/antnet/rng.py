"""Counter-based random number generation.

All randomness in this package flows through a Philox4x32-10 counter-based
generator.  Each (master_seed, replica_index) pair is expanded into a 64-bit
key via ``numpy.random.SeedSequence``, and every uniform draw consumes one
counter value.  Because the generator is a pure function of (key, counter),
trajectories are reproducible across runs and across the two walk engines
(the pure-Python reference and the compiled kernels), which consume draws in
the same order.

The algorithm is pinned: Philox4x32 with 10 rounds, 53-bit uniforms built
from output lanes 0 and 1 of each block.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint32, uint64

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)

_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=False)
def philox_block(counter, key0, key1):
    """One Philox4x32-10 block: 64-bit counter, 2x32-bit key -> 4x32 output."""
    c0 = uint32(counter & uint64(0xFFFFFFFF))
    c1 = uint32(counter >> uint64(32))
    c2 = uint32(0)
    c3 = uint32(0)
    k0 = uint32(key0)
    k1 = uint32(key1)
    for _ in range(10):
        p0 = uint64(_M0) * uint64(c0)
        p1 = uint64(_M1) * uint64(c2)
        hi0 = uint32(p0 >> uint64(32))
        lo0 = uint32(p0 & uint64(0xFFFFFFFF))
        hi1 = uint32(p1 >> uint64(32))
        lo1 = uint32(p1 & uint64(0xFFFFFFFF))
        n0 = uint32(hi1 ^ c1 ^ k0)
        n1 = lo1
        n2 = uint32(hi0 ^ c3 ^ k1)
        n3 = lo0
        c0, c1, c2, c3 = n0, n1, n2, n3
        k0 = uint32(k0 + _W0)
        k1 = uint32(k1 + _W1)
    return c0, c1, c2, c3


@njit(cache=False)
def philox_uniform(counter, key0, key1):
    """53-bit uniform in [0, 1) from one counter value."""
    x0, x1, _, _ = philox_block(counter, key0, key1)
    a = uint64(x0) >> uint64(5)   # 27 bits
    b = uint64(x1) >> uint64(6)   # 26 bits
    return ((a << uint64(26)) + b) * _INV53


@njit(cache=False)
def philox_fill(out, counter, key0, key1):
    """Fill ``out`` with uniforms for counters counter, counter+1, ...

    Returns the next unused counter value.
    """
    c = uint64(counter)
    for i in range(out.shape[0]):
        out[i] = philox_uniform(c, key0, key1)
        c += uint64(1)
    return c


def derive_key(master_seed: int, replica: int = 0) -> tuple[int, int]:
    """Expand (master_seed, replica) into the 2x32-bit Philox key."""
    ss = np.random.SeedSequence([int(master_seed), int(replica)])
    k = ss.generate_state(2, np.uint32)
    return int(k[0]), int(k[1])


class PhiloxStream:
    """Stateful view over the counter-based generator.

    One stream per replica; the counter position fully determines the
    remaining sequence, so a stream can be snapshotted and resumed.
    """

    __slots__ = ("key0", "key1", "counter")

    def __init__(self, master_seed: int, replica: int = 0, counter: int = 0):
        self.key0, self.key1 = derive_key(master_seed, replica)
        self.counter = int(counter)

    def uniform(self) -> float:
        u = philox_uniform(np.uint64(self.counter), np.uint32(self.key0),
                           np.uint32(self.key1))
        self.counter += 1
        return float(u)

    def uniforms(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        self.counter = int(philox_fill(out, np.uint64(self.counter),
                                       np.uint32(self.key0),
                                       np.uint32(self.key1)))
        return out

    def exponential(self, rate: float) -> float:
        # inverse CDF; uniform() < 1 so log argument is positive
        return -np.log1p(-self.uniform()) / rate
