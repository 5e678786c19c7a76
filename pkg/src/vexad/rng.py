"""Deterministic random streams.

Every random decision in this package flows through a Philox counter-based
bit generator keyed by a SHA-256 hash of the caller's context.  Philox is a
fully specified 64-bit counter-based algorithm, so identical keys give
identical streams on every platform and run; there is no mutable generator
state to persist or restore.
"""

import hashlib

import numpy as np


def derive_key(*parts) -> int:
    """Collapse context parts (ints, strings) into a stable 128-bit key."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "big")


def make_rng(*parts) -> np.random.Generator:
    """Philox generator keyed by ``derive_key(*parts)``."""
    return np.random.Generator(np.random.Philox(key=derive_key(*parts)))
