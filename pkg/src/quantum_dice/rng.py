"""Seeded, splittable uniform streams.

A substream is keyed by ``(seed, stream_index)``.  The key is fed to
:class:`numpy.random.SeedSequence` as ``entropy=seed, spawn_key=index`` and
drives a Philox4x64 counter-based generator, so distinct indices give
statistically independent streams and the same key always replays the same
draws.  Draws are served from a fixed-size buffer filled with
``Generator.random``; the buffering is part of the stream definition.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SEED_MAX = 2**64 - 1
_BUFFER = 4096

StreamIndex = Union[int, tuple[int, ...]]


def _check_u64(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if not 0 <= int(value) <= SEED_MAX:
        raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
    return int(value)


class Substream:
    """Uniform ``[0, 1)`` draws from one keyed Philox stream."""

    __slots__ = ("seed", "index", "_gen", "_buf", "_pos")

    def __init__(self, seed: int, index: StreamIndex = 0):
        self.seed = _check_u64(seed, "seed")
        key = (index,) if isinstance(index, (int, np.integer)) else tuple(index)
        self.index = tuple(_check_u64(k, "stream index") for k in key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.index)
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._buf: list[float] = []
        self._pos = 0

    def random(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_BUFFER).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def draws(self, n: int) -> list[float]:
        return [self.random() for _ in range(n)]

    def __repr__(self):
        return f"Substream(seed={self.seed}, index={self.index})"


def derive_substream(seed: int, stream_index: StreamIndex) -> Substream:
    """Independent stream for ``stream_index`` under the master ``seed``."""
    return Substream(seed, stream_index)
