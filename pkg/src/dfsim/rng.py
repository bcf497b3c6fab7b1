"""Seeded random-number streams.

Every stochastic quantity in the package is drawn from an :class:`Rng`,
identified by a 64-bit seed and an integer stream index.  Equal
``(seed, stream)`` pairs reproduce bitwise-identical sample sequences,
independently of how many other streams exist or in which order they are
consumed, so trajectories can run concurrently with deterministic results.

Streams are derived as ``PCG64(SeedSequence((seed, stream)))``; Gaussians
come from numpy's ziggurat transform of the uniform stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Rng"]


@dataclass(frozen=True)
class Rng:
    """A reproducible random stream identified by (seed, stream)."""

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence((int(self.seed) & (2**64 - 1), int(self.stream)))
        object.__setattr__(self, "_gen", np.random.Generator(np.random.PCG64(ss)))

    def normal(self, size=None) -> np.ndarray:
        """Standard-normal samples."""
        return self._gen.standard_normal(size)

    def uniform(self, size=None) -> np.ndarray:
        return self._gen.random(size)

    def substream(self, offset: int) -> "Rng":
        """A fresh, independent stream at ``stream + offset``."""
        return Rng(self.seed, self.stream + offset)
