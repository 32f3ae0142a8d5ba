"""Seeded random streams.

Every consumer draws from its own named stream, a Philox (counter-based)
generator keyed by ``(seed, crc32(name))``. Changing how many numbers one
stream consumes never perturbs another.
"""

import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    key = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return np.random.Generator(np.random.Philox(key))
