"""Seedable, splittable counter-based random streams.

Streams are Philox-4x64 generators keyed through ``SeedSequence(seed,
spawn_key=path)``, so any named sub-stream can be rebuilt from the root
seed alone. Variates are produced by inversion from 53-bit uniforms
``((raw >> 11) + 0.5) * 2^-53``, which keeps every draw a fixed function
of the raw 64-bit output and lies strictly inside ``(0, 1)``.
"""

import zlib

import numpy as np
from scipy import special

__all__ = ["Stream", "stream"]

_SCALE = 2.0**-53


def _key(part):
    if isinstance(part, (int, np.integer)):
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


class Stream:
    """A reproducible random stream identified by ``(seed, path)``."""

    def __init__(self, seed, path=()):
        self.seed = int(seed)
        self.path = tuple(path)
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(_key(p) for p in self.path))
        self._bitgen = np.random.Philox(ss)

    def child(self, *parts):
        return Stream(self.seed, self.path + parts)

    def raw(self, n):
        return self._bitgen.random_raw(int(n))

    def uniform(self, size):
        size = (size,) if np.isscalar(size) else tuple(size)
        n = int(np.prod(size))
        return (((self.raw(n) >> np.uint64(11)).astype(float) + 0.5) * _SCALE).reshape(size)

    def normal(self, size):
        return special.ndtri(self.uniform(size))


def stream(seed, *path):
    return Stream(seed, path)
