"""Seeded, counter-based random streams.

Every stochastic draw in the package takes an explicit ``Rng``. Streams are
Philox generators keyed by (seed, derivation path), so a child stream depends
only on its name and never on how much of the parent was consumed.
"""
import hashlib
from typing import Optional, Sequence, Tuple, Union

import numpy as np

Key = Union[int, str]


def _key_to_int(key: Key) -> int:
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"derivation keys must be non-negative, got {key}")
        return int(key)
    digest = hashlib.sha256(str(key).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class Rng:
    def __init__(self, seed: int, path: Tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed)
        self.path = tuple(path)
        sequence = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.Philox(sequence))

    def derive(self, *keys: Key) -> "Rng":
        """Independent child stream named by ``keys``."""
        return Rng(self.seed, self.path + tuple(_key_to_int(k) for k in keys))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, path={self.path})"

    def normal(self, size=None, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
        return self.generator.normal(loc, scale, size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self.generator.uniform(low, high, size)

    def integers(self, low: int, high: Optional[int] = None, size=None):
        return self.generator.integers(low, high, size)

    def random(self, size=None):
        return self.generator.random(size)

    def choice(self, a, size=None, replace: bool = True, p: Optional[Sequence[float]] = None):
        return self.generator.choice(a, size=size, replace=replace, p=p)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def rademacher(self, size) -> np.ndarray:
        """Uniform draws from {-1, +1}."""
        return self.generator.integers(0, 2, size) * 2.0 - 1.0
