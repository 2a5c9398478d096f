"""Deterministic random streams with documented chunk splitting.

All samplers in the package draw from per-chunk generators derived as
SeedSequence(entropy=seed, spawn_key=(chunk_index,)).  Replicate j lives in
chunk j // CHUNK and is produced by vectorized draws inside that chunk, so
a serial run and any parallel partition of the chunk list produce the same
output array.
"""

from __future__ import annotations

import numpy as np

# Fixed chunk width; changing it changes the stream, so it is part of the
# reproducibility contract.
CHUNK = 1 << 15


def chunk_generator(seed: int, chunk_index: int) -> np.random.Generator:
    """Generator for one chunk of a seeded stream."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(chunk_index),))
    return np.random.Generator(np.random.PCG64(ss))


def chunk_sizes(n: int) -> list[int]:
    """Sizes of the consecutive chunks covering n replicates."""
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    full, rest = divmod(n, CHUNK)
    sizes = [CHUNK] * full
    if rest:
        sizes.append(rest)
    return sizes
