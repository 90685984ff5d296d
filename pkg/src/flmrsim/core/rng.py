"""Seeded random streams keyed by purpose, client and round.

Every consumer of randomness derives its own generator from the run seed, so
results do not depend on which worker runs which client or in what order.
"""
from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Purpose tags keeping independent draws apart."""

    SHUFFLE = 1
    PARTICIPATION = 2
    HETEROGENEITY = 3
    SPLIT = 4


class SeedStreams:
    """Factory of numpy generators derived from one root seed."""

    def __init__(self, seed: int):
        self._seed = int(seed)

    @property
    def seed(self) -> int:
        return self._seed

    def generator(self, purpose: Stream, *key: int) -> np.random.Generator:
        """Independent generator for (purpose, *key)."""
        sequence = np.random.SeedSequence(self._seed, spawn_key=(int(purpose), *map(int, key)))
        return np.random.default_rng(sequence)

    def child_seed(self, purpose: Stream, *key: int) -> int:
        """A 64-bit seed for APIs that take a plain integer."""
        sequence = np.random.SeedSequence(self._seed, spawn_key=(int(purpose), *map(int, key)))
        return int(sequence.generate_state(1, dtype=np.uint64)[0])
