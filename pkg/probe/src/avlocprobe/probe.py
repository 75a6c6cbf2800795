"""Run a checkpointed model over an extended manifest and export AVSM maps.

One file per row, named <out>/<model_id>/<sample_id>.<audio_type>.avsm.
Out-of-range raw-cosine values (float slop beyond [-1, 1]) are clamped and
the count is reported in the probe log, never swallowed.  Inference runs
single-threaded so repeated probes of the same row are byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .avsm import write_avsm
from .errors import ProbeError
from .media import load_image, load_waveform
from .models import ProbeSpec, build_model
from .rows import ManifestRow, read_extended_manifest

_MODE_RANGE = {"raw-cosine": (-1.0, 1.0), "normalized-unit": (0.0, 1.0)}


@dataclass(frozen=True)
class ProbeLog:
    model_id: str
    mode: str
    rows: int
    clamped_values: int
    wall_time_s: float
    checkpoint: str
    preprocessing: dict

    def to_json_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "mode": self.mode,
            "rows": self.rows,
            "clamped_values": self.clamped_values,
            "wall_time_s": self.wall_time_s,
            "checkpoint": self.checkpoint,
            "preprocessing": self.preprocessing,
        }


def _clamp_reporting(values: np.ndarray, mode: str) -> tuple[np.ndarray, int]:
    lo, hi = _MODE_RANGE[mode]
    if not np.all(np.isfinite(values)):
        raise ProbeError("model emitted non-finite similarity values")
    outside = int(np.count_nonzero((values < lo) | (values > hi)))
    if outside:
        values = np.clip(values, lo, hi)
    return values, outside


def probe_row(model, spec: ProbeSpec, row: ManifestRow, media_root: Path) -> tuple[np.ndarray, int]:
    image = load_image(media_root / row.image, spec.image_size)
    waveform = load_waveform(media_root / row.effective_audio, spec.sample_rate, spec.audio_window_s)
    values = model.infer_map(image, waveform)
    if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
        raise ProbeError(f"row {row.sample_id}.{row.audio_type}: model returned shape {values.shape}")
    return _clamp_reporting(values.astype(np.float32), spec.mode)


def run_probe(spec: ProbeSpec, manifest_path: str | Path, media_root: str | Path, out_dir: str | Path) -> ProbeLog:
    started = time.perf_counter()
    rows = read_extended_manifest(manifest_path)
    media_root = Path(media_root)
    model_dir = Path(out_dir) / spec.model_id
    model_dir.mkdir(parents=True, exist_ok=True)

    threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        model = build_model(spec)
        clamped_total = 0
        for row in rows:
            values, clamped = probe_row(model, spec, row, media_root)
            clamped_total += clamped
            write_avsm(values, spec.mode, model_dir / f"{row.sample_id}.{row.audio_type}.avsm")
    finally:
        torch.set_num_threads(threads)

    log = ProbeLog(
        model_id=spec.model_id,
        mode=spec.mode,
        rows=len(rows),
        clamped_values=clamped_total,
        wall_time_s=time.perf_counter() - started,
        checkpoint=str(spec.checkpoint),
        preprocessing=spec.preprocessing(),
    )
    with open(Path(out_dir) / f"{spec.model_id}.probe_log.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(log.to_json_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return log
