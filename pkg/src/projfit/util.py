"""Seed derivation helpers.

All randomness in the package flows through ``numpy.random.Generator``
instances derived from integer seeds via ``SeedSequence``.  Child streams are
addressed by an integer key path, e.g. ``(replicate, stream)``, which is
deterministic and platform-stable.
"""

from __future__ import annotations

import numpy as np


def rng_from(seed, *key: int) -> np.random.Generator:
    """Return a Generator for ``seed``; ``key`` selects an independent child stream.

    ``seed`` may already be a Generator, in which case it is returned as-is
    (``key`` must then be empty).
    """
    if isinstance(seed, np.random.Generator):
        if key:
            raise ValueError("cannot derive a child stream from a live Generator")
        return seed
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *key: int) -> int:
    """Deterministic 32-bit child seed for ``(seed, key...)``; stable across platforms."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
