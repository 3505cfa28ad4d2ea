"""Random streams.

Every random draw in the package comes from PCG64 (64-bit permuted
congruential generator) seeded through ``numpy.random.SeedSequence``;
independent child streams are obtained with ``SeedSequence.spawn``. Both
algorithms are fixed by NumPy's stability policy, so streams are
reproducible across platforms for a given seed.
"""

from __future__ import annotations

import os

import numpy as np

SEED_ENV = "FUZZ_ASSURE_SEED"


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_generators(seed: int, count: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def default_seed(fallback: int = 0) -> int:
    value = os.environ.get(SEED_ENV)
    if value is None or value == "":
        return fallback
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {value!r}") from None
