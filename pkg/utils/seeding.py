import zlib

import numpy as np


def substream(rootSeed: int, name: str) -> np.random.Generator:
    """
    Derive an independent, reproducible generator from the root seed.

    Args:
        rootSeed: Run-wide seed
        name: Stream name ("datagen", "init", "sampling", ...)

    Returns:
        numpy Generator whose state depends only on (rootSeed, name)
    """
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=rootSeed, spawn_key=(key,)))


def childSeeds(rng: np.random.Generator, count: int) -> np.ndarray:
    """Draw per-item seeds so work can be farmed out without sharing a generator."""
    return rng.integers(0, 2**63 - 1, size=count, dtype=np.int64)
