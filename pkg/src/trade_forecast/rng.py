"""Deterministic pseudorandom generator (SplitMix64).

Model initialization and sample shuffling must produce the same numbers
for the same seed on every platform, so the generator is pinned here
instead of deferring to the interpreter's RNG. SplitMix64 walks its
64-bit state by the golden-ratio increment and mixes each state with two
multiply-xorshift rounds; seed 0 emits 0xE220A8397B1DCDAF first.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """64-bit generator with a documented, platform-independent sequence."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        """Advance the state and return the next 64-bit draw."""
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        """Draw from [low, high) using the top 53 bits of one u64."""
        unit = (self.next_u64() >> 11) * 2.0 ** -53
        return low + unit * (high - low)

    def next_below(self, bound: int) -> int:
        """Unbiased draw from [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (MASK64 + 1) - (MASK64 + 1) % bound
        while True:
            draw = self.next_u64()
            if draw < limit:
                return draw % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle driven by this generator."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
