"""Deterministic named random streams.

Every random decision in the package draws from a stream derived from one
root seed plus a path of names (e.g. root -> partition -> batch -> member),
so concurrent work and re-runs see identical randomness.
"""

from __future__ import annotations

import zlib

import numpy as np


def _name_to_int(name) -> int:
    if isinstance(name, int):
        return name & 0xFFFFFFFF
    return zlib.crc32(str(name).encode("utf-8"))


def substream_seed(root_seed: int, *names) -> np.random.SeedSequence:
    """SeedSequence for the stream identified by ``names`` under ``root_seed``."""
    return np.random.SeedSequence([int(root_seed) & 0xFFFFFFFF] + [_name_to_int(n) for n in names])


def substream(root_seed: int, *names) -> np.random.Generator:
    """Generator for the named stream."""
    return np.random.default_rng(substream_seed(root_seed, *names))
