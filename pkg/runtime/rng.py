"""Seeded random streams.

Every stream is a numpy ``Generator`` over the PCG64 bit generator, seeded
through ``SeedSequence``. PCG64 output is specified bit-for-bit by numpy, so
streams reproduce across platforms. A master seed fans out into child seeds
with ``SeedSequence(master).spawn(n)``; child ``i`` is always the same
regardless of how many siblings are drawn after it.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Return a PCG64 generator for *seed*."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(ss))


def child_seeds(master_seed: int, n: int) -> list[int]:
    """Derive *n* independent 63-bit integer seeds from *master_seed*."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Generator for a named sub-stream of *seed* (e.g. ``substream(seed, trial, 2)``)."""
    return make_rng(np.random.SeedSequence(seed, spawn_key=tuple(keys)))
