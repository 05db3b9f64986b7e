"""Seed-stream derivation.

Every random draw in the package goes through :func:`stream`, which maps a
base seed plus a tuple of integer identifiers (instance index, step index,
purpose tag, ...) to an independent generator. Identical keys always give
identical streams regardless of call order.
"""
from __future__ import annotations

import numpy as np

# purpose tags keep explainer draws and evaluation draws on disjoint streams
EXPLAIN = 1
BOUNDARY = 2
SURROGATE_SAMPLE = 3
EVALUATE = 4
SPLIT = 5
SELECT = 6
FOREST = 7
TUNE = 8


def stream(seed: int, *key: int) -> np.random.Generator:
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError("seed and stream keys must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


def derive_seed(seed: int, *key: int) -> int:
    """A 32-bit child seed, for APIs that only take an integer."""
    ss = np.random.SeedSequence([int(seed), *map(int, key)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])
