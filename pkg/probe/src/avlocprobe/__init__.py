"""Adapter that exports audio-visual similarity maps from model checkpoints."""

__version__ = "0.1.0"

from .errors import ProbeError
from .models import FAMILIES, ProbeSpec, build_model, save_reference_checkpoint
from .probe import ProbeLog, run_probe
from .rows import ManifestRow, read_extended_manifest

__all__ = [
    "FAMILIES",
    "ManifestRow",
    "ProbeError",
    "ProbeLog",
    "ProbeSpec",
    "build_model",
    "read_extended_manifest",
    "run_probe",
    "save_reference_checkpoint",
]
