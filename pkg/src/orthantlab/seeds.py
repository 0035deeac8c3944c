"""Deterministic seed derivation.

Per-replica seeds are a SplitMix-style mix of (master seed, replica index),
so any single replica can be reproduced in isolation by external tooling.
"""

from __future__ import annotations

import numpy as np

__all__ = ["splitmix64", "replica_seed", "make_rng"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One output of the SplitMix64 generator for the given state."""
    z = (state + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def replica_seed(master_seed: int, replica_index: int) -> int:
    """Seed for one replica: mix the master seed, then the replica index."""
    return splitmix64(splitmix64(master_seed & _MASK) ^ (replica_index & _MASK))


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) keyed by the given 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK))
