"""Writer for the AVSM similarity-map wire format.

Layout: "AVSM" magic, u8 version 1, u8 mode (0 raw cosine, 1 normalized
unit), u32 LE height, u32 LE width, then float32 LE values row-major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ProbeError

MODE_CODES = {"raw-cosine": 0, "normalized-unit": 1}
_HEADER = struct.Struct("<4sBBII")


def write_avsm(values: np.ndarray, mode: str, path: str | Path) -> None:
    if mode not in MODE_CODES:
        raise ProbeError(f"unknown map mode {mode!r}")
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
        raise ProbeError(f"similarity map must be non-empty and 2-D, got shape {values.shape}")
    header = _HEADER.pack(b"AVSM", 1, MODE_CODES[mode], values.shape[0], values.shape[1])
    Path(path).write_bytes(header + values.tobytes())
