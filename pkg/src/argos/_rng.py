"""Deterministic derivation of independent RNG streams.

Every stochastic stage draws from a stream keyed by a master seed plus a
tuple of tags (equation index, stage name, replicate number, ...).  Results
are therefore independent of execution order and safe to parallelize.
"""

from __future__ import annotations

import zlib

import numpy as np


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        if tag < 0:
            raise ValueError(f"rng tags must be non-negative, got {tag}")
        return int(tag)
    return zlib.crc32(str(tag).encode("utf-8"))


def seed_seq(master: int, *tags) -> np.random.SeedSequence:
    """SeedSequence for (master, *tags); identical inputs give identical streams."""
    key = tuple(_tag_to_int(t) for t in tags)
    return np.random.SeedSequence(entropy=int(master), spawn_key=key)


def make_rng(master: int, *tags) -> np.random.Generator:
    return np.random.default_rng(seed_seq(master, *tags))


def derive_seed(master: int, *tags) -> int:
    """Collapse a derived stream to a plain integer usable as a new master seed."""
    return int(seed_seq(master, *tags).generate_state(1, np.uint32)[0])
