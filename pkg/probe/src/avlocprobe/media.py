"""Image and waveform loading with the preprocessing the probe models expect."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ProbeError


def load_image(path: str | Path, image_size: int) -> np.ndarray:
    """RGB image resized to (image_size, image_size), float32 in [0, 1], HWC."""
    path = Path(path)
    if not path.exists():
        raise ProbeError(f"missing image: {path}")
    with Image.open(path) as img:
        resized = img.convert("RGB").resize((image_size, image_size), Image.BILINEAR)
    return np.asarray(resized, dtype=np.float32) / 255.0


def load_waveform(path: str | Path, sample_rate: int, window_s: float) -> np.ndarray:
    """First window_s seconds of a 16-bit mono WAV, zero-padded if shorter."""
    path = Path(path)
    if not path.exists():
        raise ProbeError(f"missing audio: {path}")
    try:
        with wave.open(str(path), "rb") as reader:
            if reader.getsampwidth() != 2 or reader.getnchannels() != 1:
                raise ProbeError(f"{path}: expected mono 16-bit PCM")
            if reader.getframerate() != sample_rate:
                raise ProbeError(
                    f"{path}: sample rate {reader.getframerate()} does not match "
                    f"the configured {sample_rate} (resampling is out of scope)"
                )
            frames = reader.readframes(reader.getnframes())
    except wave.Error as e:
        raise ProbeError(f"{path}: not a readable WAV file: {e}") from e
    samples = np.frombuffer(frames, dtype="<i2").astype(np.float32) / 32767.0
    target = int(round(window_s * sample_rate))
    if samples.size >= target:
        return samples[:target]
    return np.pad(samples, (0, target - samples.size))
