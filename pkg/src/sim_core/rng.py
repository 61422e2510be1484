"""
Seeded random streams, one per stochastic source.
"""
import zlib
from typing import Sequence

import numpy as np


class RngStream:
    """PCG64 generator keyed by (seed, stream_id)"""

    def __init__(self, seed: int, stream_id: int):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(sequence))

    @classmethod
    def for_name(cls, seed: int, name: str) -> "RngStream":
        return cls(seed, zlib.crc32(name.encode("utf-8")))

    def uniform(self) -> float:
        """Draw from [0, 1)"""
        return float(self._gen.random())

    def exponential(self, mean: float) -> float:
        """Negative-exponential draw with the given mean (0 when mean is 0)"""
        if mean <= 0:
            return 0.0
        return float(self._gen.exponential(mean))

    def integers(self, high: int) -> int:
        """Uniform integer in [0, high)"""
        return int(self._gen.integers(0, high))

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p

    def choice_index(self, weights: Sequence[float]) -> int:
        """Index drawn proportionally to weights"""
        total = float(sum(weights))
        x = self.uniform() * total
        acc = 0.0
        for i, w in enumerate(weights):
            acc += w
            if x < acc:
                return i
        return len(weights) - 1

    def bytes(self, n: int) -> bytes:
        return bytes(int(b) for b in self._gen.integers(0, 256, size=n))
