"""SplitMix64 streams.

The generator is fixed so that every randomized result is bit-reproducible
on any platform::

    state <- state + 0x9E3779B97F4A7C15            (mod 2**64)
    z     <- state
    z     <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (mod 2**64)
    z     <- (z ^ (z >> 27)) * 0x94D049BB133111EB  (mod 2**64)
    out   <- z ^ (z >> 31)

Uniform doubles are ``(out >> 11) * 2**-53`` in [0, 1).

Replica streams are derived from ``(seed, index)`` with the same finalizer::

    state(seed, index) = mix(mix(seed) ^ index)

where ``mix`` is the three-line finalizer above applied to its argument
plus one golden-ratio increment. ``mix`` is a bijection of 64-bit words, so
distinct indices under one seed always get distinct starting states.

Because the stream is counter based (output ``k`` depends only on
``state + k * GAMMA``), blocks of outputs and lock-stepped batches of
independent streams are produced with vectorized numpy arithmetic.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1
_INV53 = 2.0**-53


def mix64(x: int) -> int:
    z = (x + GAMMA) & MASK
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return z ^ (z >> 31)


def derive_state(seed: int, index: int) -> int:
    """Starting state of replica ``index`` under ``seed``."""
    return mix64(mix64(seed & MASK) ^ (index & MASK))


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


class RandomStream:
    """A single SplitMix64 stream. Single-owner mutable state."""

    __slots__ = ("state",)

    def __init__(self, seed: int = 0, *, state: int | None = None):
        self.state = (seed if state is None else state) & MASK

    @classmethod
    def for_replica(cls, seed: int, index: int) -> "RandomStream":
        return cls(state=derive_state(seed, index))

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK
        z = ((z ^ (z >> 27)) * MIX2) & MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * _INV53

    def below(self, bound: int) -> int:
        """Integer in [0, bound) by multiply-shift on a 64-bit draw."""
        return (self.next_u64() * bound) >> 64

    def uniform_block(self, size: int) -> np.ndarray:
        """The next ``size`` uniforms, identical to ``size`` calls of uniform()."""
        k = np.arange(1, size + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + k * np.uint64(GAMMA)
            out = _mix_array(z)
        self.state = (self.state + size * GAMMA) & MASK
        return (out >> np.uint64(11)).astype(np.float64) * _INV53


class StreamBatch:
    """Independent replica streams advanced in lock step."""

    def __init__(self, seed: int, start: int, count: int):
        self.state = np.array(
            [derive_state(seed, i) for i in range(start, start + count)],
            dtype=np.uint64,
        )

    def uniform(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            self.state += np.uint64(GAMMA)
            out = _mix_array(self.state.copy())
        return (out >> np.uint64(11)).astype(np.float64) * _INV53
