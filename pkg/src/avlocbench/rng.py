"""Reproducible keyed pseudorandom streams.

Every random decision in this package flows through a `SeedStream`, a pure
function of a 64-bit `(seed, stream_key)` pair.  The generator is splitmix64:

    state_0  = mix64(seed XOR mix64(stream_key XOR STREAM_SALT))
    raw_i    = mix64((state_0 + (i + 1) * GOLDEN) mod 2**64)

where `GOLDEN = 0x9E3779B97F4A7C15` and `mix64` is the splitmix64 output
scrambler:

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9   (mod 2**64)
    z ^= z >> 27;  z *= 0x94D049BB133111EB   (mod 2**64)
    z ^= z >> 31

Uniform doubles take the top 53 bits of `raw_i`.  Normal deviates use the
Box-Muller transform on consecutive raw pairs.  Because `raw_i` is indexed
rather than stateful, any slice of a stream can be produced independently,
so parallel generation schedules cannot change results.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
STREAM_SALT = 0x14057B7EF767814F

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_NEG_53 = 2.0 ** -53


class StreamDomain(IntEnum):
    """Namespaces for stream keys, so unrelated draws never collide."""

    OFFSCREEN = 1
    NOISE = 2
    FIXTURE = 3
    ORACLE_MAP = 4


def make_stream_key(domain: StreamDomain, index: int) -> int:
    """Pack a (domain, index) pair into a single 64-bit stream key."""
    if index < 0:
        raise ValueError(f"stream index must be non-negative, got {index}")
    return ((int(domain) << 56) | (index & 0x00FFFFFFFFFFFFFF)) & MASK64


def fnv1a64(text: str) -> int:
    """FNV-1a 64-bit hash of a string; a stable stream key for named things."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & MASK64
    return h


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _mix64_int(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SeedStream:
    """An indexable pseudorandom stream identified by (seed, stream_key)."""

    seed: int
    stream_key: int = 0

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    @property
    def _state0(self) -> int:
        return _mix64_int((self.seed & MASK64) ^ _mix64_int((self.stream_key & MASK64) ^ STREAM_SALT))

    def raw(self, n: int, start: int = 0) -> np.ndarray:
        """Raw 64-bit outputs at positions start .. start+n-1."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
        states = np.uint64(self._state0) + idx * np.uint64(GOLDEN)
        return _mix64(states)

    def uniforms(self, n: int, start: int = 0) -> np.ndarray:
        """n float64 values uniform on [0, 1)."""
        return (self.raw(n, start) >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53

    def normals(self, n: int) -> np.ndarray:
        """n float64 standard-normal deviates via Box-Muller on raw pairs."""
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n}")
        pairs = (n + 1) // 2
        raws = self.raw(2 * pairs)
        # u1 in (0, 1] so log() is finite; u2 in [0, 1).
        u1 = ((raws[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_NEG_53
        u2 = (raws[1::2] >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = (2.0 * np.pi) * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]

    def pick_index(self, count: int) -> int:
        """A uniform index in [0, count) from the first draw of the stream."""
        if count <= 0:
            raise ValueError(f"count must be positive, got {count}")
        idx = int(self.uniforms(1)[0] * count)
        return min(idx, count - 1)
