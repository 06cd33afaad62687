"""Deterministic seed derivation for parallel-safe trial streams.

A master seed is expanded into per-trial seeds by hashing the trial's index
tuple through splitmix64, so workers need no coordination and a report is
reproducible for any worker count: ``derive_seed(master, opt_idx, T_idx,
seed_idx)`` depends only on its arguments.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


def derive_seed(master: int, *indices: int) -> int:
    """64-bit mix of a master seed with an index tuple."""
    state = splitmix64(master & _MASK)
    for idx in indices:
        state = splitmix64(state ^ ((idx + 1) * _GOLDEN & _MASK))
    return state


def make_rng(seed: int) -> np.random.Generator:
    """The one RNG constructor used by trials and diagnostics."""
    return np.random.default_rng(seed)
