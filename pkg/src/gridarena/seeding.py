"""Seed derivation and RNG construction.

Every stochastic component takes a 64-bit seed and derives sub-seeds with
`derive_seed`, so whole pipelines (generation, episodes, tournaments) are
pure functions of their root seed. Derivation goes through BLAKE2b rather
than Python's `hash()`, which is salted per process.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(root: int, *tags) -> int:
    """Derive a stable 64-bit sub-seed from a root seed and a tag path."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(root) & MASK64).encode())
    for tag in tags:
        h.update(b"/")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator (Philox) so streams are cheap to fork."""
    return np.random.Generator(np.random.Philox(seed & MASK64))
