"""
Reproducible random streams.

All randomness is drawn from counter-based Philox generators keyed by a
``SeedSequence``. Per-sample and per-chunk streams are spawned from a root
seed, so results do not depend on how work is scheduled across threads.
"""

import numpy as np


def make_generator(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Build a Philox generator from a seed or seed sequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


def spawn_generators(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators for ``n`` work items, stable under reordering."""
    return [make_generator(child) for child in np.random.SeedSequence(seed).spawn(n)]


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit child seed for the stream addressed by ``keys``."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
