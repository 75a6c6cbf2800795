"""Minimal reader for the extended-manifest wire format.

Only the columns the probe consumes are materialized: row identity, the
effective audio path for the row's condition, and the image path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ProbeError

AUDIO_TYPES = ("positive", "silence", "noise", "offscreen")


@dataclass(frozen=True)
class ManifestRow:
    sample_id: str
    audio_type: str
    image: str
    effective_audio: str
    duration_s: float


def read_extended_manifest(path: str | Path) -> list[ManifestRow]:
    path = Path(path)
    rows: list[ManifestRow] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ProbeError(f"{path}: line {line_no}: invalid JSON: {e.msg}") from e
            try:
                row = ManifestRow(
                    sample_id=record["sample_id"],
                    audio_type=record["audio_type"],
                    image=record["image"],
                    effective_audio=record["effective_audio"],
                    duration_s=float(record["duration_s"]),
                )
            except KeyError as e:
                raise ProbeError(f"{path}: line {line_no}: missing field {e.args[0]!r}") from e
            if row.audio_type not in AUDIO_TYPES:
                raise ProbeError(f"{path}: line {line_no}: unknown audio_type {row.audio_type!r}")
            rows.append(row)
    if not rows:
        raise ProbeError(f"{path}: extended manifest is empty")
    return rows
