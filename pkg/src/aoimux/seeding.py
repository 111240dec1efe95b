"""Seed derivation for reproducible, order-independent random streams.

Splitting rule: ``derive_seed(base, *salt)`` feeds the tuple
``(base, *salt)`` as entropy to ``numpy.random.SeedSequence`` and returns
the first uint64 word of its state.  The same inputs always produce the
same child seed, and distinct salts give statistically independent
streams, so trials, scan positions and modes can be generated in any
order (or in parallel) without changing the results.
"""

from __future__ import annotations

import numpy as np

# salt tags used across the package
TRIAL_SALT = 1
SCAN_SALT = 2


def derive_seed(base: int, *salt: int) -> int:
    """Deterministic child seed for the given base seed and salt tuple."""
    ss = np.random.SeedSequence((int(base),) + tuple(int(s) for s in salt))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
