"""Derived, order-independent random streams."""

from __future__ import annotations

import numpy as np

# distinct domains keep e.g. augmentation and click streams from colliding
AUGMENT = 1
CLICKS = 2


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator seeded by hashing ``seed`` together with ``key``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def stream_id(seed: int, *key: int) -> str:
    return "/".join(str(int(v)) for v in (seed, *key))
