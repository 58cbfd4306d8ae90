"""Counter-based random streams: one independent Philox stream per (seed, key...)."""
from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream addressed by ``seed`` and an integer key path.

    Streams depend only on their address, never on draw order elsewhere, so
    trial i sees the same numbers whatever the scheduling of other trials.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
