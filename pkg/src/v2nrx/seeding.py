"""Deterministic seed splitting.

A child stream is ``SeedSequence(entropy=master, spawn_key=keys)`` where
string keys are mapped to integers with CRC-32. Streams for different key
tuples are statistically independent, so results do not depend on the order
in which frames or iterations are processed.
"""

import zlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    return int(k)


def derive_seed(master: int, *keys) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=tuple(_key(k) for k in keys))


def derive_rng(master: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *keys))
