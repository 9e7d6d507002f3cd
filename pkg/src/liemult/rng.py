"""Counter-based random stream derivation.

Every stochastic routine in the library draws from a stream derived from
``(seed, *path)`` where the path components name the trial, cell, or purpose.
Streams are independent of execution order and of how work is distributed
across workers, so parallel and serial runs produce identical numbers.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream", "stream_key"]


def stream_key(part: int | str) -> int:
    """Map a stream-path component to a stable 32-bit key."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream path components must be nonnegative, got {part}")
        return int(part)
    return zlib.crc32(part.encode("utf-8"))


def substream(seed: int, *path: int | str) -> np.random.Generator:
    """Return an independent Philox generator for ``(seed, *path)``.

    The same (seed, path) always yields the same stream; distinct paths give
    statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(stream_key(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))
