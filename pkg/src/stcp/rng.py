"""Counter-based deterministic random number generation.

The generator is splitmix64: output i of a stream with seed s is
``finalize(s + (i+1) * GOLDEN mod 2^64)`` where finalize is the standard
xor-shift/multiply mix.  Because each output depends only on (seed, index),
a stream produces identical values whether drawn one at a time or in
vectorized blocks, and sub-streams can be split off without coordination.

Constants (Steele, Lea & Flood's SplitMix64):
  GOLDEN = 0x9E3779B97F4A7C15   (2^64 / golden ratio, the increment)
  MIX1   = 0xBF58476D1CE4E5B9
  MIX2   = 0x94D049BB133111EB
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

_U = np.uint64


def mix64(z: int) -> int:
    """Scalar splitmix64 finalizer over a 64-bit state."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def child_seed(seed: int, index: int) -> int:
    """Numbered sub-stream seed: mix64(seed XOR (index+1)*GOLDEN)."""
    if index < 0:
        raise ValueError("child index must be non-negative")
    return mix64((seed & MASK64) ^ (((index + 1) * GOLDEN) & MASK64))


def derive(seed: int, label: str) -> int:
    """Labeled sub-stream seed, absorbing the label bytes one at a time."""
    state = seed & MASK64
    for byte in label.encode("utf-8"):
        state = mix64(state ^ ((byte * GOLDEN) & MASK64))
    return state


class Stream:
    """A seekable splitmix64 stream.  Not thread-safe; split instead."""

    def __init__(self, seed: int, counter: int = 0) -> None:
        self.seed = int(seed) & MASK64
        self.counter = int(counter)

    def child(self, index: int) -> "Stream":
        return Stream(child_seed(self.seed, index))

    def next_u64(self) -> int:
        value = mix64((self.seed + ((self.counter + 1) * GOLDEN)) & MASK64)
        self.counter += 1
        return value

    def u64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit outputs as a uint64 array (vectorized path)."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        z = _U(self.seed) + idx * _U(GOLDEN)  # wraps mod 2^64
        z = (z ^ (z >> _U(30))) * _U(MIX1)
        z = (z ^ (z >> _U(27))) * _U(MIX2)
        return z ^ (z >> _U(31))

    def uniform(self, n: int) -> np.ndarray:
        """n doubles in [0, 1) with 53-bit resolution."""
        return (self.u64(n) >> _U(11)).astype(np.float64) * (1.0 / (1 << 53))

    def uniform_scalar(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint_below(self, bound: int) -> int:
        """Integer in [0, bound) via 53-bit uniform scaling (bound << 2^53)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return min(int(self.uniform_scalar() * bound), bound - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n)."""
        perm = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.randint_below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
