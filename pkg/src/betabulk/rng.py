"""Reproducible per-replica random streams.

A stream is keyed by ``(seed, stream_id, domain)`` through numpy's
``SeedSequence`` spawn keys and drives a counter-based Philox generator, so
replica ``r`` gets the same numbers no matter how replicas are batched or
distributed across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# domain tags keep matrix-side and SDE-side draws independent
MATRIX = 0
SDE = 1
HERMITE = 2
DIFFUSION = 3


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    domain: int = MATRIX

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            int(self.seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(int(self.domain), int(self.stream_id) & 0xFFFFFFFFFFFFFFFF))
        return np.random.Generator(np.random.Philox(ss))


def as_generator(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, RngStream):
        return stream.generator()
    return RngStream(int(stream)).generator()
