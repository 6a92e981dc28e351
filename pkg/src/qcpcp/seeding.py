"""Splittable seed derivation.

Every random stream in the package is a pure function of a 64-bit master
seed and a tuple of non-negative integer keys (run index, subset rank, ...).
Streams are numpy ``Philox`` generators keyed through ``SeedSequence`` with
``spawn_key=keys``, so the t-th draw of a stream never depends on execution
order or on how many other streams were created.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def _sequence(master_seed: int, keys: tuple[int, ...]) -> np.random.SeedSequence:
    if master_seed < 0 or master_seed > MASK64:
        raise ValueError(f"master seed must be an unsigned 64-bit integer, got {master_seed}")
    return np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(k) for k in keys))


def derive_seed(master_seed: int, *keys: int) -> int:
    """Return a 64-bit child seed for ``keys`` under ``master_seed``."""
    word = _sequence(master_seed, keys).generate_state(1, dtype=np.uint64)[0]
    return int(word)


def stream(master_seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for ``keys``; draw t belongs to item t."""
    return np.random.Generator(np.random.Philox(_sequence(master_seed, keys)))
