"""Deterministic random streams.

All randomness in the package flows through counter-based Philox generators
keyed by a seed plus optional stream indices, so every experiment is
reproducible from its seed alone and independent runs never share a stream.
"""

from __future__ import annotations

import numpy as np

#: algorithm identifier recorded in experiment output headers
RNG_ALGORITHM = "numpy-philox4x64-10"


def seed_sequence(seed: int, *stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=tuple(stream))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for the given (seed, stream) pair."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *stream)))


def derive_seed(seed: int, *stream: int) -> int:
    """Collapse (seed, stream) into a plain integer seed for child components."""
    return int(seed_sequence(seed, *stream).generate_state(1)[0])
