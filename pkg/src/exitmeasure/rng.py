"""Counter-based random numbers for reproducible parallel sampling.

Philox4x64-10, evaluated at explicit (key, counter) positions.  Each walk
owns a private stream identified by ``(seed, pole, replicate)``; the walk's
i-th draw is the block at counter ``(i, 0, replicate, pole)`` with key
``(seed, 0)``.  Because a block is a pure function of key and counter, any
partitioning of walks across workers (or across the compiled and fallback
backends) produces bit-identical streams.

The compiled kernel carries its own C copy of the block function; the
vectorised version here backs the numpy fallback and the tests, and is
checked against ``numpy.random.Philox`` raw output.
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)

# 2^-53, turns the top 53 bits of a word into a double in [0, 1)
_INV53 = 1.0 / 9007199254740992.0

# key word 1 for the measurement-noise stream, so it can never collide with
# walk streams (which use key word 1 = 0)
NOISE_KEY1 = np.uint64(0x6E6F697365)  # "noise"


def _mulhilo(a, b):
    ah, al = a >> _S32, a & _MASK32
    bh, bl = b >> _S32, b & _MASK32
    t = ((al * bl) >> _S32) + ((al * bh) & _MASK32) + ((ah * bl) & _MASK32)
    hi = ah * bh + ((al * bh) >> _S32) + ((ah * bl) >> _S32) + (t >> _S32)
    return hi, a * b


def philox4x64(key0, key1, c0, c1, c2, c3):
    """One Philox4x64-10 block per counter; all arguments uint64 (arrays ok).

    Returns the four output words.  Vectorised: counter words may be numpy
    arrays of a common shape.
    """
    k0 = np.uint64(key0)
    k1 = np.uint64(key1)
    c0 = np.asarray(c0, dtype=np.uint64)
    c1 = np.asarray(c1, dtype=np.uint64)
    c2 = np.asarray(c2, dtype=np.uint64)
    c3 = np.asarray(c3, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return c0, c1, c2, c3


def uniform01(word):
    """Map a uint64 word to a double in [0, 1) using its top 53 bits."""
    return (word >> _S11) * _INV53


def trial_pair(seed, pole, replicate, draw):
    """The two uniforms of rejection trial ``draw`` of a walk's stream."""
    w0, w1, _, _ = philox4x64(np.uint64(seed), np.uint64(0),
                              draw, np.uint64(0), replicate, pole)
    return uniform01(w0), uniform01(w1)


def noise_uniform(seed, n):
    """n deterministic uniforms in [-1, 1) for the measurement-noise hook."""
    idx = np.arange(n, dtype=np.uint64)
    w0, _, _, _ = philox4x64(np.uint64(seed), NOISE_KEY1,
                             np.zeros(n, dtype=np.uint64),
                             np.zeros(n, dtype=np.uint64),
                             np.zeros(n, dtype=np.uint64), idx)
    return 2.0 * uniform01(w0) - 1.0


class WalkStream:
    """Scalar view of one walk's stream, for the single-walk reference path."""

    def __init__(self, seed: int, pole: int, replicate: int):
        self.seed = np.uint64(seed)
        self.pole = np.uint64(pole)
        self.replicate = np.uint64(replicate)
        self.draw = np.uint64(0)

    def next_pair(self):
        u0, u1 = trial_pair(self.seed, self.pole, self.replicate, self.draw)
        with np.errstate(over="ignore"):
            self.draw = self.draw + np.uint64(1)
        return float(u0), float(u1)
