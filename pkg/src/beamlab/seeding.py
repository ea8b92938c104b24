"""Deterministic seed fan-out for parallel sweeps.

Every sampled task derives its own RNG from (master_seed, task_index) through
a fixed 64-bit mix, so results are byte-identical regardless of how tasks are
scheduled across workers.

Frozen mix (do not change; recorded outputs depend on it):

    z = (master + (index + 1) * 0x9E3779B97F4A7C15) mod 2^64   # splitmix64 step
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9       mod 2^64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB       mod 2^64
    child = z ^ (z >> 31)
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def child_seed(master_seed: int, index: int) -> int:
    """Return the 64-bit child seed for task `index` under `master_seed`."""
    z = (master_seed + (index + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def rng_for(master_seed: int, index: int) -> np.random.Generator:
    """A fresh Generator for task `index`, independent of evaluation order."""
    return np.random.default_rng(child_seed(master_seed, index))
