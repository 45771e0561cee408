"""Seeded random streams.

Every random draw in the package comes from a Philox-4x64 counter-based
generator (``numpy.random.Philox``) whose 128-bit key is built from a user
seed (low 64 bits) and a stream tag (high 64 bits).  The same
``(seed, stream)`` pair gives the same numbers on every platform.
"""

import numpy as np

_MASK64 = (1 << 64) - 1

# stream tags
NOISE = 0
PATH = 1
GRAPH = 2


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    key = (int(seed) & _MASK64) | ((int(stream) & _MASK64) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial seed, ``seed XOR trial``."""
    return (int(seed) & _MASK64) ^ int(trial)
