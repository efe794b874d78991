"""Counter-based random number streams.

All randomness in a simulation run is derived from a single master seed.
Each logical source of noise (environment feedback, action sampling,
replay scheduling) gets its own stream, keyed by integers, so that runs
are reproducible regardless of execution order or worker count.
"""

from __future__ import annotations

import numpy as np

# stream identifiers
STREAM_ENV = 0
STREAM_ACTION = 1
STREAM_REPLAY = 2


def stream_key(master_seed: int, *key: int) -> np.ndarray:
    """Derive a 128-bit Philox key from a master seed and integer path."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return ss.generate_state(2, np.uint64)


def stream_generator(master_seed: int, *key: int) -> np.random.Generator:
    """Sequential generator for a keyed stream."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def keyed_uniform(key: np.ndarray, counter: tuple[int, ...]) -> float:
    """A single uniform in [0, 1) addressed by a counter.

    The same (key, counter) pair always yields the same value, independent
    of any other draws. Used for per-round duel feedback so that outcomes
    are a pure function of (seed, stream, t, i, j).
    """
    c = [0, 0, 0, 0]
    for idx, v in enumerate(counter[:4]):
        c[idx] = int(v)
    bg = np.random.Philox(counter=c, key=key)
    return float(bg.random_raw(1)[0]) / 2.0**64
