"""Deterministic derivation of independent random streams from a master seed.

Every randomized operation in the package takes an explicit
``numpy.random.Generator``.  Callers fan out independent streams with
``derive_seed`` / ``rng_from``, which hash their arguments through
``numpy.random.SeedSequence``.  String parts are folded in via SHA-256, so the
derivation is stable across processes and platforms (unlike builtin ``hash``).
"""

from __future__ import annotations

import hashlib

import numpy as np


def _as_entropy(part: int | str) -> int:
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    value = int(part)
    if value < 0:
        raise ValueError(f"seed parts must be non-negative, got {value}")
    return value


def derive_seed(*parts: int | str) -> int:
    """Collapse ``parts`` into a single non-negative 64-bit seed.

    The same parts always produce the same seed; any change to any part
    produces an unrelated one.
    """
    if not parts:
        raise ValueError("derive_seed requires at least one part")
    entropy = [_as_entropy(p) for p in parts]
    state = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)
    return int(state[0])


def rng_from(*parts: int | str) -> np.random.Generator:
    """Return a generator seeded from ``derive_seed(*parts)``."""
    return np.random.default_rng(derive_seed(*parts))
