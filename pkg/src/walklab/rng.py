"""Deterministic, independent RNG streams for replicas.

Stream seeds are derived from (master_seed, replica_index) with a
splitmix64-style mixer: z = master + (replica + 1) * 0x9E3779B97F4A7C15
(mod 2^64), followed by the splitmix64 finalizer.  The finalizer is a
bijection on 64-bit words and the pre-mix is injective in the replica
index for a fixed master (the multiplier is odd), so distinct replicas
always get distinct stream seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit integers."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_stream_seed(master_seed: int, replica_index: int) -> int:
    """64-bit stream seed for one replica, a pure function of both inputs."""
    if replica_index < 0:
        raise ValueError("replica_index must be nonnegative")
    z = (master_seed + (replica_index + 1) * _GOLDEN) & _MASK64
    return splitmix64(z)


@dataclass(frozen=True)
class RngSpec:
    """Identifies one replica's randomness stream."""

    master_seed: int
    replica_index: int = 0

    def __post_init__(self) -> None:
        if self.replica_index < 0:
            raise ValueError("replica_index must be nonnegative")

    def stream_seed(self) -> int:
        return derive_stream_seed(self.master_seed, self.replica_index)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.stream_seed()))


def make_rng(rng) -> np.random.Generator:
    """Accept an RngSpec, a bare integer seed, or a ready Generator."""
    if isinstance(rng, RngSpec):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngSpec(int(rng)).generator()
    return rng
