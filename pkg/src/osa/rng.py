"""Seeded pseudo-random stream shared by every randomized component.

The generator is xoshiro256** with its 256-bit state filled from four
consecutive splitmix64 outputs.  Everything downstream (baseline placements,
instance generation, target sampling) draws from this class so that a 64-bit
seed pins a run bit-exactly, independent of the Python version.
"""

from __future__ import annotations

from typing import MutableSequence, Sequence, TypeVar

MASK64 = (1 << 64) - 1

T = TypeVar("T")


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed (order sensitive)."""
    acc = 0
    for part in parts:
        _, out = splitmix64((acc ^ (part & MASK64)) & MASK64)
        acc = out
    return acc


class Xoshiro256:
    """xoshiro256** generator seeded through splitmix64."""

    def __init__(self, seed: int):
        sm = seed & MASK64
        state = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            state.append(out)
        self._s = state

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, bound: int) -> int:
        """Unbiased integer in ``[0, bound)`` (Lemire's multiply-and-reject)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - bound) % bound
        while True:
            m = self.next_u64() * bound
            if (m & MASK64) >= threshold:
                return m >> 64

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in the closed range ``[low, high]``."""
        return low + self.below(high - low + 1)

    def shuffle_prefix(self, items: MutableSequence[T], k: int) -> None:
        """Partial forward Fisher-Yates: after the call ``items[:k]`` is a
        uniform k-sample in uniformly random order."""
        n = len(items)
        for pos in range(min(k, n)):
            r = pos + self.below(n - pos)
            items[pos], items[r] = items[r], items[pos]

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        pool = list(population)
        if k > len(pool):
            raise ValueError("sample larger than population")
        self.shuffle_prefix(pool, k)
        return pool[:k]
