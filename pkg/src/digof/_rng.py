"""Seed derivation.

Every stochastic routine takes an integer seed. Sub-streams use the path
``keys`` as the :class:`numpy.random.SeedSequence` spawn key, so a child seed
depends only on its path and never on call order. Spawn keys are length
sensitive: ``(1,)`` and ``(1, 0)`` name different streams.
"""
import numpy as np


def _sequence(seed, keys):
    seed, keys = int(seed), tuple(int(k) for k in keys)
    if seed < 0 or any(k < 0 for k in keys):
        raise ValueError(f"seed components must be non-negative, got {(seed, *keys)}")
    return np.random.SeedSequence(seed, spawn_key=keys)


def derive_seed(seed, *keys):
    """Return a 63-bit child seed for the path ``(seed, *keys)``."""
    return int(_sequence(seed, keys).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def make_rng(seed, *keys):
    return np.random.default_rng(_sequence(seed, keys))
