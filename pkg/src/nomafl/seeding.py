"""Counter-based random streams.

Every stream is keyed by ``(master_seed, tag, replication, round, vehicle)``
and built from :class:`numpy.random.SeedSequence` over that integer tuple, so
a stream never depends on how many other streams were drawn before it. Unused
key positions are 0.
"""
from __future__ import annotations

import numpy as np

MOBILITY = 1
CHANNEL = 2
LOCAL_SGD = 3
DATA = 4
PARTITION = 5
MODEL_INIT = 6
SWEEP = 7


def stream(master_seed: int, tag: int, replication: int = 0, round_: int = 0, vehicle: int = 0) -> np.random.Generator:
    key = [int(master_seed), tag, int(replication), int(round_), int(vehicle)]
    if any(k < 0 for k in key):
        raise ValueError(f"stream key entries must be non-negative, got {key}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))
