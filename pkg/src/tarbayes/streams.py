"""Counter-based random streams.

Every stream is a pure function of the master seed and an integer key, so a
replication draws the same numbers no matter which worker runs it or when.
"""

import numpy as np

REPLICATION = 1
LIMIT_DRAW = 2
PILOT = 3
MARTINGALE = 4
KDE = 5


def derive_stream(master_seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def as_stream(stream_or_seed) -> np.random.Generator:
    if isinstance(stream_or_seed, np.random.Generator):
        return stream_or_seed
    return derive_stream(stream_or_seed)
