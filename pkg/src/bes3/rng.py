"""Deterministic, substream-addressable random streams.

Each stream is a Philox-4x64 counter-based generator keyed by the pair
(seed, stream_id), so path ``i`` of a run owns stream ``(seed, i)`` and never
shares state with any other path, whatever the thread count.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream:
    """Uniform and standard-normal draws for one (seed, stream_id) pair.

    Scalar calls return floats, sized calls return float64 arrays. A sized
    call of length n yields the same values as n scalar calls.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        if stream_id < 0 or stream_id > _MASK64:
            raise ValueError(f"stream_id must be in [0, 2**64), got {stream_id}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed & _MASK64, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def draw_uniform01(self, size=None):
        """Uniform on [0, 1)."""
        if size is None:
            return float(self._gen.random())
        return self._gen.random(size)

    def draw_standard_normal(self, size=None):
        if size is None:
            return float(self._gen.standard_normal())
        return self._gen.standard_normal(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def make_rng(seed: int, stream_id: int = 0) -> RngStream:
    return RngStream(seed, stream_id)
