"""Seeded random streams.

Every top-level run derives its generators from one master seed. Iteration ``i`` of
``lw`` or ``mh`` gets the child stream with spawn key ``(i,)``, so each iteration is
reproducible on its own and independent of worker scheduling.
"""

from __future__ import annotations

import numpy as np

from app.core.errors import ConfigError

SEED_MAX = 2**64 - 1


def validate_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= SEED_MAX:
        raise ConfigError(f"seed must be an integer in [0, 2**64 - 1], got {seed!r}")
    return seed


def run_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(validate_seed(seed)))


def iteration_rng(seed: int, iteration: int) -> np.random.Generator:
    if iteration < 0:
        raise ValueError("iteration must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(validate_seed(seed), spawn_key=(iteration,)))
