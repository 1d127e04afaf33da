"""Seed derivation for reproducible parallel streams.

Every stream is a Philox (counter-based) generator keyed by the master
seed plus a tuple of non-negative integers, so a job's randomness depends
only on its coordinates and never on scheduling order.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def seed_sequence(seed: int, *stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(s) for s in stream))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *stream)))


def derive_seed(seed: int, *stream: int) -> int:
    """A 64-bit child seed for the given stream coordinates."""
    words = seed_sequence(seed, *stream).generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)
