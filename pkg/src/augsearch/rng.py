"""Seeded random streams.

Every stochastic choice in the library (probability gates, random signs,
cutout centers, sub-policy selection, crop offsets) is drawn from an
explicit stream keyed by ``(seed, stream_id)``. Two streams with the same
key produce the same draws on every platform and under any thread
schedule, which is what makes search logs and augmented outputs
byte-reproducible regardless of worker count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream_rng", "RngStream"]

RngStream = np.random.Generator


def stream_rng(seed: int, stream_id: int = 0) -> RngStream:
    """Return a generator deterministically keyed by (seed, stream_id)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))
