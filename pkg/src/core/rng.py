"""Seeded random streams.

Every draw in the engine comes from numpy's PCG64 generator seeded through
``SeedSequence(entropy=seed, spawn_key=(stream,))``. A stream is identified by a
small integer: stream 0 covers setup work (task generation, the initial split,
picking a test video) and stream ``r`` covers the selection draws of round ``r``.
Identical (seed, stream) pairs replay identical draws on every platform.
"""

import numpy as np

from src.core.types import MAX_SEED
from src.utils.helpers import InvalidConfig

SETUP_STREAM = 0


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise InvalidConfig("seed must be an integer", {"seed": seed})
    if not 0 <= int(seed) <= MAX_SEED:
        raise InvalidConfig("seed must be a 64-bit unsigned integer", {"seed": seed})
    return int(seed)


def make_rng(seed: int, stream: int = SETUP_STREAM) -> np.random.Generator:
    if stream < 0:
        raise InvalidConfig("stream ids are nonnegative", {"stream": stream})
    sequence = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(sequence))
