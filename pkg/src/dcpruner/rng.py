"""Deterministic 64-bit PRNG (splitmix64).

The generator is fully specified so runs can be reproduced bit-for-bit
from a seed, independently of the host platform or Python version:

- state advances by the golden-gamma constant 0x9E3779B97F4A7C15 (mod 2^64)
- output z is mixed as z ^= z>>30; z *= 0xBF58476D1CE4E5B9;
  z ^= z>>27; z *= 0x94D049BB133111EB; z ^= z>>31
- ``random()`` takes the top 53 bits of the next output
- ``randint(lo, hi)`` uses unbiased rejection sampling on the next outputs
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """Minimal deterministic generator; see module docstring for the contract."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        return _mix(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive, without modulo bias."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            u = self.next_u64()
            if u < limit:
                return lo + u % span


def subseed(seed: int, index: int) -> int:
    """Derive an independent stream seed for the index-th parallel task."""
    return _mix((seed & _MASK) ^ ((index + 1) * _GAMMA & _MASK))
