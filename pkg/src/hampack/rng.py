"""Deterministic random streams.

Every experiment derives its generators from an integer seed plus an
integer path (sweep cell, trial index, ...) through a counter-based
bit generator, so results do not depend on scheduling or worker count.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def rng_stream(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *path).

    Distinct (seed, path) tuples give independent streams; equal tuples
    give bit-identical streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64,
                                spawn_key=tuple(int(p) & _MASK64 for p in path))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *path: int) -> int:
    """Collapse (seed, *path) to a single 63-bit integer seed.

    Used to hand a standalone reproduction seed to run_trial so that a
    sweep cell's trial can be rerun from the CLI with one number.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64,
                                spawn_key=tuple(int(p) & _MASK64 for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)
