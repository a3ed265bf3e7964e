"""Seeded random streams; every source of randomness in the package starts here."""

from __future__ import annotations

import numpy as np

__all__ = ["make_rng", "spawn_streams"]


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(seed))


def spawn_streams(seed, count: int) -> list[np.random.Generator]:
    """``count`` statistically independent generators derived from one seed."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in seed.spawn(count)]
