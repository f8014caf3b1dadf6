"""Seeded, splittable random streams for reproducible simulation runs.

Every stochastic operation in this package takes an explicit generator
handle. Streams are counter-based (Philox), so trials can be farmed out
to worker processes without any shared state: each trial derives its own
key from the base seed with a splitmix64 step, which decorrelates nearby
seeds.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One output of the splitmix64 mixer for a 64-bit state."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Derive the stream key for one trial of a seeded experiment."""
    return splitmix64((base_seed + trial_index) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator under an explicit 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
