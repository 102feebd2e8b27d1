"""SplitMix64, the portable seeded generator used for golden-file randomness.

SplitMix64 (Steele, Lea & Flood 2014) advances a 64-bit counter by the golden
gamma 0x9E3779B97F4A7C15 and scrambles it with two xor-shift-multiply rounds.
It depends only on 64-bit unsigned wrap-around arithmetic, so the sequence is
identical on every platform, in pure Python and inside numba kernels.

Derived draws:

* ``uniform()`` takes the top 53 bits: ``(x >> 11) * 2**-53`` in ``[0, 1)``.
* ``below(n)`` is ``floor(uniform() * n)``.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
INV_2_53 = 1.0 / 9007199254740992.0


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance ``state``; return ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return state, z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state, out = splitmix64_next(self.state)
        return out

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * INV_2_53

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.uniform() * n), n - 1)
