"""Deterministic random stream for sampling runs.

splitmix64: a 64-bit mix generator with a simple additive state walk.
It is seedable, platform-independent (pure integer arithmetic), fast
enough for millions of draws, and trivially reproducible from the seed
alone, which is what sampling-based estimates here need; statistical
sophistication beyond that is not required.  Uniforms take the top 53
bits so every value is an exact dyadic rational in [0, 1).
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / (1 << 53)

RNG_ALGORITHM = "splitmix64"


class SplitMix64:
    """Seeded 64-bit generator; the stream is a pure function of the seed."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform draw in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * _INV_2_53
