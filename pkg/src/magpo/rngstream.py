"""Deterministic RNG stream discipline.

One counter-based generator (numpy Philox, 4x64) is used everywhere so that
seeds stay portable.  Stream i of a master seed is keyed through
``SeedSequence([master_seed, *indices])``; distinct index tuples give
statistically independent streams, and a (seed, index) pair always
reproduces the same stream regardless of how work is scheduled.
"""

import numpy as np

#: Recorded in every run manifest so outputs can be traced to the generator.
GENERATOR_ID = "numpy.random.Philox (4x64, counter-based)"


def stream(master_seed: int, *indices: int) -> np.random.Generator:
    """Return the Generator for the given master seed and stream indices."""
    if not 0 <= int(master_seed) < 2 ** 64:
        raise ValueError("master seed must fit in 64 bits")
    seq = np.random.SeedSequence([int(master_seed), *[int(i) for i in indices]])
    return np.random.Generator(np.random.Philox(seq))
