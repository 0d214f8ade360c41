"""Seeded, chunked random streams.

Each chunk of a run gets its own PCG64 substream derived from ``(seed, chunk
index)`` through ``numpy.random.SeedSequence``. Output therefore depends only
on the seed and chunk size, never on how chunks are scheduled. Standard
Normals come from numpy's ziggurat sampler (``Generator.standard_normal``).
"""
from __future__ import annotations

import os
import secrets

import numpy as np

DEFAULT_CHUNK = 65_536
RNG_DESCRIPTION = "numpy PCG64 per-chunk SeedSequence(seed, spawn_key=(chunk,)); normals by ziggurat"

_MAX_SEED = 2**64 - 1


def chunk_size() -> int:
    """Streaming chunk size, overridable with the ``CGAUSS_CHUNK`` environment variable."""
    raw = os.environ.get("CGAUSS_CHUNK")
    if not raw:
        return DEFAULT_CHUNK
    size = int(raw)
    if size < 1:
        raise ValueError(f"CGAUSS_CHUNK must be a positive integer, got {raw!r}")
    return size


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed <= _MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def fresh_seed() -> int:
    return secrets.randbits(64)


def substream(seed: int, chunk: int, stream: int = 0) -> np.random.Generator:
    """Generator for one chunk; ``stream`` separates independent draws within a chunk."""
    key = (chunk,) if stream == 0 else (chunk, stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(check_seed(seed), spawn_key=key)))


def chunks(total: int, size: int | None = None):
    """Yield ``(chunk_index, rows)`` covering ``total`` rows."""
    size = size or chunk_size()
    for k, start in enumerate(range(0, total, size)):
        yield k, min(size, total - start)
