"""Reproducible random streams for parallel Monte Carlo.

Every trajectory (and every optimizer restart) draws from its own Philox
counter-based stream.  Philox is keyed by 128 bits; we use the two key words
directly as (master_seed, stream_index), so the mapping from (seed, index) to
a stream is trivial to document and to reproduce in any other Philox
implementation: key word 0 = master seed, key word 1 = stream index, counter
starting at zero.  Distinct key pairs give statistically independent streams
by construction, and a stream's output does not depend on which worker
process consumes it.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(master_seed: int, index: int) -> np.random.Generator:
    """Generator for stream `index` under `master_seed`."""
    if master_seed < 0 or index < 0:
        raise ValueError("seed and stream index must be nonnegative")
    key = np.array([master_seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(master_seed: int, index: int, n: int) -> np.ndarray:
    """First `n` uniform[0,1) deviates of stream (master_seed, index)."""
    return stream(master_seed, index).random(n)
