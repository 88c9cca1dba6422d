"""Derived random streams.

Every stochastic component draws from its own generator, derived from the
run seed plus a label path. Streams are independent by construction and
stable across runs, so adding a consumer never perturbs the draws seen by
existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_part(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError(f"stream key parts must be non-negative, got {part}")
    return int(part)


def stream(seed: int, *path: int | str) -> np.random.Generator:
    """Return the generator for ``path`` under ``seed``.

    Same (seed, path) always yields the same sequence; distinct paths give
    statistically independent sequences.
    """
    key = tuple(_key_part(p) for p in path)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def derive_seed(seed: int, *path: int | str) -> int:
    """Collapse (seed, path) into a plain integer seed for nested runs."""
    key = tuple(_key_part(p) for p in path)
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1, np.uint64)[0])
