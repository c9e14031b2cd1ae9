"""Seed derivation.

Every random source in the package is a :class:`random.Random` seeded from a
64-bit integer.  Child seeds are derived with numpy's ``SeedSequence`` using
``spawn_key=(index,)``, so query ``i`` under master seed ``s`` always sees the
same stream regardless of how many other queries ran or in which order.
"""

from __future__ import annotations

import random

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(master: int, *path: int) -> int:
    ss = np.random.SeedSequence(entropy=master & MASK64, spawn_key=tuple(int(p) for p in path))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def make_rng(master: int, *path: int) -> random.Random:
    return random.Random(derive_seed(master, *path) if path else master)


def splitmix64(x: int) -> int:
    """Scalar splitmix64 finaliser on Python ints."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def splitmix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorised splitmix64; ``x`` must be ``uint64`` (wraps modulo 2**64)."""
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))
