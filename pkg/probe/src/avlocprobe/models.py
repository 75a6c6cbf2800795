"""Model plug-ins: each family is a checkpointed callable
(image, waveform) -> H x W similarity map.

The built-in families are compact audio-visual two-towers suitable for
pipeline validation; real model repositories register the same way, by
wrapping their published inference code behind `MapModel`.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .errors import ProbeError


@dataclass(frozen=True)
class ProbeSpec:
    """Everything needed to reproduce one model's map export."""

    model_id: str
    family: str
    mode: str  # "raw-cosine" | "normalized-unit"
    checkpoint: str
    image_size: int = 224
    audio_window_s: float = 5.0
    sample_rate: int = 16000

    def preprocessing(self) -> dict:
        return {
            "image_size": self.image_size,
            "audio_window_s": self.audio_window_s,
            "sample_rate": self.sample_rate,
        }


class MapModel(Protocol):
    def infer_map(self, image_hwc: np.ndarray, waveform: np.ndarray) -> np.ndarray: ...


class _TwoTowerNet(nn.Module):
    """Cosine similarity between per-cell visual embeddings and one audio
    embedding; output grid is the image size divided by 8."""

    def __init__(self, embed_dim: int = 32):
        super().__init__()
        self.visual = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(16, 32, 3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(32, embed_dim, 3, stride=2, padding=1),
        )
        self.audio = nn.Sequential(
            nn.Conv1d(1, 16, kernel_size=64, stride=16),
            nn.ReLU(),
            nn.Conv1d(16, 32, kernel_size=16, stride=8),
            nn.ReLU(),
            nn.AdaptiveAvgPool1d(1),
        )
        self.audio_proj = nn.Linear(32, embed_dim)

    def forward(self, image: torch.Tensor, waveform: torch.Tensor) -> torch.Tensor:
        v = F.normalize(self.visual(image), dim=1)
        a = self.audio(waveform).squeeze(-1)
        a = F.normalize(self.audio_proj(a), dim=1)
        return torch.einsum("bdhw,bd->bhw", v, a)


class TwoTowerCosine:
    """Raw-cosine family: map values are cosine similarities in [-1, 1]."""

    mode = "raw-cosine"

    def __init__(self, net: _TwoTowerNet):
        self.net = net.eval()

    def infer_map(self, image_hwc: np.ndarray, waveform: np.ndarray) -> np.ndarray:
        image = torch.from_numpy(image_hwc).permute(2, 0, 1)[None]
        audio = torch.from_numpy(waveform)[None, None]
        with torch.no_grad():
            similarity = self.net(image, audio)[0]
        return similarity.numpy()


class TwoTowerSaliency(TwoTowerCosine):
    """Normalized-unit family: the cosine map min-max scaled into [0, 1],
    mirroring saliency-style outputs; a constant map becomes all 0.5."""

    mode = "normalized-unit"

    def infer_map(self, image_hwc: np.ndarray, waveform: np.ndarray) -> np.ndarray:
        raw = super().infer_map(image_hwc, waveform)
        lo, hi = float(raw.min()), float(raw.max())
        if hi - lo == 0.0:
            return np.full_like(raw, 0.5)
        return (raw - lo) / (hi - lo)


def _build_two_tower(checkpoint: str, saliency: bool) -> MapModel:
    net = _TwoTowerNet()
    try:
        state = torch.load(checkpoint, map_location="cpu", weights_only=True)
        net.load_state_dict(state)
    except (OSError, RuntimeError, ValueError) as e:
        raise ProbeError(f"cannot load checkpoint {checkpoint!r}: {e}") from e
    return TwoTowerSaliency(net) if saliency else TwoTowerCosine(net)


FAMILIES: dict[str, tuple[str, Callable[[str], MapModel]]] = {
    "two-tower-cosine": ("raw-cosine", lambda ckpt: _build_two_tower(ckpt, saliency=False)),
    "two-tower-saliency": ("normalized-unit", lambda ckpt: _build_two_tower(ckpt, saliency=True)),
}


def build_model(spec: ProbeSpec) -> MapModel:
    if spec.family not in FAMILIES:
        raise ProbeError(f"unknown model family {spec.family!r}; available: {sorted(FAMILIES)}")
    native_mode, builder = FAMILIES[spec.family]
    if spec.mode != native_mode:
        raise ProbeError(
            f"family {spec.family!r} emits {native_mode} maps, but the spec declares {spec.mode!r}"
        )
    return builder(spec.checkpoint)


def save_reference_checkpoint(path: str | Path, weight_seed: int = 0) -> Path:
    """Materialize a seeded two-tower checkpoint (for tests and demos)."""
    torch.manual_seed(weight_seed)
    net = _TwoTowerNet()
    torch.save(net.state_dict(), path)
    return Path(path)
