"""Seeded, counter-based random streams.

Every replicate draws from its own Philox stream.  The Philox key is derived
from the base seed and the replicate index is written into the high counter
word, so stream ``(base, i)`` is a pure function of both and two replicates
never share a counter block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    base_seed: int
    replicate_index: int = 0

    def __post_init__(self):
        if not 0 <= self.base_seed <= U64:
            raise ValueError(f"base_seed must be an unsigned 64-bit integer, got {self.base_seed}")
        if self.replicate_index < 0:
            raise ValueError("replicate_index must be >= 0")

    def replicate(self, offset: int) -> "SeedSpec":
        return SeedSpec(self.base_seed, self.replicate_index + offset)


@lru_cache(maxsize=256)
def _key(base_seed: int) -> tuple:
    state = np.random.SeedSequence(base_seed).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def stream(seed: SeedSpec) -> np.random.Generator:
    """Generator for one replicate.  Normals come from numpy's ziggurat."""
    k0, k1 = _key(seed.base_seed)
    bitgen = np.random.Philox(
        key=np.array([k0, k1], dtype=np.uint64),
        counter=np.array([0, 0, seed.replicate_index, 0], dtype=np.uint64),
    )
    return np.random.Generator(bitgen)


def standard_normals(seed: SeedSpec, n: int, dim: int) -> np.ndarray:
    """``(n, dim)`` array; row ``i`` comes from stream ``seed.replicate(i)``."""
    out = np.empty((n, dim))
    for i in range(n):
        out[i] = stream(seed.replicate(i)).standard_normal(dim)
    return out
