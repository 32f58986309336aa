"""Seeded random streams.

Every stochastic component (initialisation, dropout, shuffling, synthetic
data) draws from an :class:`Rng`. Child streams are keyed by a string label
so that adding a new consumer never perturbs the draws of existing ones.
"""

import zlib

import numpy as np


def _label_key(label):
    return zlib.crc32(str(label).encode("utf-8"))


class Rng:
    def __init__(self, seed=0, _spawn_key=()):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._spawn_key = tuple(_spawn_key)
        self._seq = np.random.SeedSequence(seed, spawn_key=self._spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    def child(self, label):
        """Independent, reproducible stream derived from (seed, path, label)."""
        return Rng(self.seed, self._spawn_key + (_label_key(label),))

    # thin pass-throughs used throughout the package
    def random(self, size=None):
        return self.generator.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n):
        return self.generator.permutation(n)

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self._spawn_key})"
