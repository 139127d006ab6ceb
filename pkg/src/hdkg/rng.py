"""Seeded random streams.

Every random choice in the package flows from a single top-level seed.
Subsystems draw from named child streams so that, for example, changing the
cache policy's random draws cannot perturb embedding initialization.  Streams
are derived with ``numpy.random.SeedSequence(seed, spawn_key=(index,))`` where
the index is fixed per stream name below; the bit generator is PCG64.  The
scheme is part of the on-disk format contract: artifacts written with one
seed reproduce byte for byte.
"""

from __future__ import annotations

import numpy as np

# Fixed name -> spawn index table.  Append only; never renumber.
STREAMS = {
    "base-matrix": 0,   # the fixed random projection used by the encoder
    "init": 1,          # embedding initialization
    "batch-shuffle": 2, # training batch order
    "random-policy": 3, # Random cache eviction draws
    "drop-random": 4,   # random dimension dropping
    "synthetic": 5,     # synthetic graph generation (tests, tools)
}

GENERATOR_TAG = "np-pcg64"  # recorded in checkpoints


def stream(seed: int, name: str) -> np.random.Generator:
    """Return the named child generator for a top-level seed."""
    if name not in STREAMS:
        raise KeyError(f"unknown random stream {name!r}; known: {sorted(STREAMS)}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name],))
    return np.random.Generator(np.random.PCG64(ss))
