"""Negative-audio synthesis and bit-exact 16-bit PCM WAV encoding.

Noise is standard-normal, clipped to [-1, 1], drawn from a `SeedStream` so
identical (seed, stream_key) pairs always produce identical buffers.  WAV
output is canonical RIFF/WAVE, PCM code 1, mono, 16-bit signed little-endian;
floats quantize as round-half-even(x * 32767) clamped to [-32768, 32767].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .manifest import Sample, Taxonomy
from .rng import SeedStream


@dataclass(frozen=True)
class AudioBuffer:
    """Mono float audio with every sample in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int
    channels: int = 1

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate}")
        if self.channels != 1:
            raise ValidationError(f"only mono buffers are supported, got {self.channels} channels")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValidationError(f"samples must be 1-D, got shape {samples.shape}")
        if samples.size and (np.max(np.abs(samples)) > 1.0 or not np.all(np.isfinite(samples))):
            raise ValidationError("samples must be finite and within [-1, 1]")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


def _sample_count(duration_s: float, sample_rate: int) -> int:
    if duration_s <= 0:
        raise ValidationError(f"duration must be positive, got {duration_s}")
    if sample_rate <= 0:
        raise ValidationError(f"sample_rate must be positive, got {sample_rate}")
    return int(round(duration_s * sample_rate))


def gen_silence(duration_s: float, sample_rate: int) -> AudioBuffer:
    """An all-zero buffer of round(duration * rate) samples."""
    n = _sample_count(duration_s, sample_rate)
    return AudioBuffer(np.zeros(n, dtype=np.float64), sample_rate)


def gen_noise(duration_s: float, sample_rate: int, stream: SeedStream) -> AudioBuffer:
    """Standard-normal noise clipped to [-1, 1], deterministic per stream."""
    n = _sample_count(duration_s, sample_rate)
    values = np.clip(stream.normals(n), -1.0, 1.0)
    return AudioBuffer(values, sample_rate)


def assign_offscreen(
    sample: Sample,
    pool: Sequence[Sample],
    taxonomy: Taxonomy,
    stream: SeedStream,
) -> str:
    """Pick an offscreen source uniformly among pool samples whose broad
    category differs from the target's; returns its sample_id."""
    target_broad = taxonomy.lookup(sample.fine_category)
    eligible = [p for p in pool if taxonomy.lookup(p.fine_category) != target_broad]
    if not eligible:
        raise ValidationError(
            f"sample {sample.sample_id!r}: no offscreen candidate outside broad "
            f"category {target_broad.value!r}"
        )
    return eligible[stream.pick_index(len(eligible))].sample_id


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Float [-1, 1] to int16: round-half-even(x * 32767), clamped."""
    scaled = np.round(np.asarray(samples, dtype=np.float64) * 32767.0)
    return np.clip(scaled, -32768, 32767).astype("<i2")


def wav_bytes(buffer: AudioBuffer) -> bytes:
    data = quantize_pcm16(buffer.samples).tobytes()
    byte_rate = buffer.sample_rate * buffer.channels * 2
    block_align = buffer.channels * 2
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(data),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        buffer.channels,
        buffer.sample_rate,
        byte_rate,
        block_align,
        16,  # bits per sample
        b"data",
        len(data),
    )
    return header + data


def write_wav(buffer: AudioBuffer, path: str | Path) -> None:
    Path(path).write_bytes(wav_bytes(buffer))
