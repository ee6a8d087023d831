"""Deterministic, splittable random streams.

Every random draw in the package comes from a ``numpy.random.Generator``
backed by Philox, a counter-based bit generator.  A stream is identified by
``(seed, tag, stream_id)``:

* ``seed`` is the 64-bit master seed,
* ``tag`` is an optional command name, folded in through CRC32 so that two
  commands sharing a master seed never share streams,
* ``stream_id`` is the replica index.

The three are fed to ``SeedSequence(seed, spawn_key=(crc32(tag), stream_id))``,
so replica ``r`` is reproducible without touching replicas ``0..r-1``.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

MAX_SEED = 2**64 - 1


def tag_hash(tag: str | None) -> int:
    if tag is None:
        return 0
    return zlib.crc32(tag.encode("utf-8"))


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    tag: str | None = None

    def generator(self) -> np.random.Generator:
        return make_rng(self.seed, self.stream_id, self.tag)


def make_rng(seed: int, stream_id: int = 0, tag: str | None = None) -> np.random.Generator:
    seed = check_seed(seed)
    if stream_id < 0:
        raise ValueError("stream_id must be non-negative")
    ss = np.random.SeedSequence(seed, spawn_key=(tag_hash(tag), int(stream_id)))
    return np.random.Generator(np.random.Philox(ss))


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, an RngStream or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return make_rng(int(rng))
    raise TypeError(f"cannot build a random generator from {type(rng).__name__}")
