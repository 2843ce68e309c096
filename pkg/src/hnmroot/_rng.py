"""Keyed random streams.

Every randomized step draws from a generator derived from a base seed plus a
tuple of integer keys, so results do not depend on the order in which steps
are executed.
"""

import numpy as np


def keyed_rng(seed, *keys):
    """Return a Generator seeded by ``seed`` and a sequence of non-negative ints.

    Nested sequences in ``keys`` are flattened with their length prepended, so
    ``(1, (2, 3))`` and ``(1, 2, 3)`` give different streams.
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for key in keys:
        if isinstance(key, (tuple, list, frozenset, set)):
            items = sorted(key) if isinstance(key, (frozenset, set)) else list(key)
            entropy.append(len(items))
            entropy.extend(int(k) for k in items)
        else:
            entropy.append(int(key))
    if any(k < 0 for k in entropy):
        raise ValueError("rng keys must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def as_seed(rng):
    """Draw a 32-bit seed from a Generator (or pass an int through)."""
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    if rng is None:
        rng = np.random.default_rng()
    return int(rng.integers(0, 2**32 - 1))
