"""
Root-seed derivation.

Every random stream in the lab is spawned from one root seed and a fixed
subsystem id, so adding a consumer never shifts the streams of the others:

    stream = default_rng(SeedSequence([root_seed, SUBSYSTEM_IDS[name], *extra]))

"extra" carries cell coordinates (sweep mode, bit-width, repeat index) when a
subsystem needs several independent streams.
"""
from typing import Sequence

import numpy as np

SUBSYSTEM_IDS = {
    "data": 0,
    "init": 1,
    "training": 2,
    "evaluation": 3,
    "search": 4,
    "sweep": 5,
    "demo": 6,
}


def derive_seed(root_seed: int, subsystem: str, extra: Sequence[int] = ()) -> int:
    """Stable 63-bit integer seed for a subsystem stream."""
    sequence = np.random.SeedSequence([int(root_seed) & 0xFFFFFFFFFFFFFFFF, SUBSYSTEM_IDS[subsystem], *extra])
    return int(sequence.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def subsystem_rng(root_seed: int, subsystem: str, extra: Sequence[int] = ()) -> np.random.Generator:
    """Generator for one subsystem stream."""
    return np.random.default_rng(derive_seed(root_seed, subsystem, extra))
