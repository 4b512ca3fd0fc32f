"""Seeded, splittable random streams.

The generator is SplitMix64 (Steele, Lea & Flood 2014): output ``k`` of a stream
with seed ``s`` is ``fmix64(s + (k + 1) * 0x9E3779B97F4A7C15)`` where ``fmix64`` is
the Stafford variant-13 finalizer. Since every output is a pure function of
``(seed, k)`` the stream can be evaluated in bulk and reproduced bit-exactly on
any platform.

Derived streams use :func:`mix`::

    mix(s, r) = fmix64(fmix64(s) ^ fmix64(r + 0x9E3779B97F4A7C15))

applied left to right for more than one key, e.g. ``mix(s, a, b) = mix(mix(s, a), b)``.
"""

from __future__ import annotations

import numpy as np

from . import _native

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def fmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(seed: int, *keys: int) -> int:
    """Derive a 64-bit stream seed from a master seed and integer keys."""
    h = seed & MASK64
    for key in keys:
        h = fmix64(fmix64(h) ^ fmix64((key + GOLDEN) & MASK64))
    return h


def as_seed(seed: int) -> np.uint64:
    return np.uint64(int(seed) & MASK64)


class RngStream:
    """A SplitMix64 stream: ``seed`` fixed, ``counter`` advances with every draw."""

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & MASK64
        self.counter = counter

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, counter={self.counter})"

    def split(self, key: int) -> RngStream:
        return RngStream(mix(self.seed, key))

    def next_u64(self) -> int:
        out = np.empty(1, dtype=np.uint64)
        _native.fill_u64(as_seed(self.seed), np.uint64(self.counter), out)
        self.counter += 1
        return int(out[0])

    def uniforms(self, size: int) -> np.ndarray:
        """``size`` doubles in [0, 1) with 53 random bits each."""
        out = np.empty(size, dtype=np.float64)
        if size:
            _native.fill_unit(as_seed(self.seed), np.uint64(self.counter), out)
        self.counter += size
        return out

    def random(self) -> float:
        return float(self.uniforms(1)[0])
