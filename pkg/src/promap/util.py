"""Deterministic hashing helpers.

All tie-breaking and pseudo-random choices in the toolkit go through these
mixers so results are reproducible across runs and platforms (Python's
builtin ``hash`` is salted per process and never used).
"""

from __future__ import annotations

_M64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 mixing step; uniform 64-bit output for 64-bit input."""
    x = (int(x) + 0x9E3779B97F4A7C15) & _M64  # int() guards numpy overflow
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return (z ^ (z >> 31)) & _M64


def hash2(seed: int, a: int, b: int) -> int:
    """Deterministic hash of an ordered pair under a seed."""
    return splitmix64(splitmix64(int(seed) ^ splitmix64(a)) ^ int(b))
