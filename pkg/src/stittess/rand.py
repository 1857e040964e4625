"""Deterministic stream derivation for seeded, order-independent replication."""

from __future__ import annotations

import numpy as np


def derive_rng(seed: int, *indices: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *indices).

    Streams for distinct key tuples are statistically independent, so
    replicates may run concurrently and be aggregated in any order.
    """
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(i) for i in indices]]))
