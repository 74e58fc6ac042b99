"""Seed handling: every stochastic entry point accepts a seed or Generator."""

from __future__ import annotations

import numpy as np


def as_generator(seed) -> np.random.Generator:
    """Coerce ``seed`` (None, int, SeedSequence, or Generator) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def point_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Independent child seed for parameter point ``index`` of a run.

    Derivation is (seed, index) -> SeedSequence, so each point's stream is
    reproducible regardless of how many points run or in what order.
    """
    return np.random.SeedSequence((int(seed), int(index)))
