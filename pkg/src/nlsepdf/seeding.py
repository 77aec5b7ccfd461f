"""Deterministic counter-based random streams.

Independent streams are derived from (seed, stream) pairs via distinct
Philox keys, so parallel estimators are reproducible and mergeable in a
fixed order regardless of execution schedule.
"""

from __future__ import annotations

import numpy as np


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the `stream`-th independent generator for `seed`."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    # distinct 128-bit Philox keys per (seed, stream)
    return np.random.Generator(np.random.Philox(key=(int(stream) << 64) | int(seed)))


def as_generator(rng, n_streams: int = 1) -> list[np.random.Generator]:
    """Normalize `rng` (seed int or Generator) to `n_streams` generators."""
    if isinstance(rng, (int, np.integer)):
        return [rng_stream(int(rng), k) for k in range(n_streams)]
    if isinstance(rng, np.random.Generator):
        if n_streams == 1:
            return [rng]
        return rng.spawn(n_streams)
    raise TypeError(f"rng must be an int seed or numpy Generator, got {type(rng)!r}")
