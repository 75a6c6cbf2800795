"""Synthetic models and map sources for self-contained evaluation runs.

Oracle maps are a pure function of (oracle parameters, sample_id, audio_type)
so the on-disk AVSM route and the in-memory route produce identical values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .errors import ValidationError
from .manifest import AudioType, Sample
from .rng import SeedStream, StreamDomain, fnv1a64, make_stream_key
from .simmap import MapMode, SimilarityMap, consensus_from_annotations, read_map


class OracleKind(str, Enum):
    PERFECT = "perfect"
    CONSTANT = "constant"
    RANDOM = "random"


_ORACLE_MODE = {
    OracleKind.PERFECT: MapMode.RAW_COSINE,
    OracleKind.CONSTANT: MapMode.NORMALIZED_UNIT,
    OracleKind.RANDOM: MapMode.RAW_COSINE,
}


@dataclass(frozen=True)
class OracleModel:
    """A test double: perfect (GT indicator), constant, or seeded random."""

    kind: OracleKind
    constant_level: float = 0.9
    seed: int = 0

    @property
    def mode(self) -> MapMode:
        return _ORACLE_MODE[self.kind]

    def __post_init__(self) -> None:
        lo, hi = self.mode.value_range
        if self.kind is OracleKind.CONSTANT and not lo <= self.constant_level <= hi:
            raise ValidationError(
                f"constant level {self.constant_level} outside {self.mode.value} range"
            )


def oracle_map(
    oracle: OracleModel,
    sample: Sample,
    audio_type: AudioType,
    height: int,
    width: int,
    min_agreement: int = 1,
) -> SimilarityMap:
    """The similarity map this oracle emits for one evaluation row."""
    if oracle.kind is OracleKind.PERFECT:
        if audio_type is AudioType.POSITIVE:
            gt = consensus_from_annotations(sample.gt_annotations, height, width, min_agreement)
            values = gt.mask.astype(np.float32)
        else:
            values = np.zeros((height, width), dtype=np.float32)
        return SimilarityMap(values=values, mode=oracle.mode)
    if oracle.kind is OracleKind.CONSTANT:
        values = np.full((height, width), oracle.constant_level, dtype=np.float32)
        return SimilarityMap(values=values, mode=oracle.mode)
    key = make_stream_key(
        StreamDomain.ORACLE_MAP,
        fnv1a64(f"{sample.sample_id}/{audio_type.value}") & 0x00FFFFFFFFFFFFFF,
    )
    stream = SeedStream(oracle.seed, key)
    values = (2.0 * stream.uniforms(height * width) - 1.0).astype(np.float32)
    return SimilarityMap(values=values.reshape(height, width), mode=oracle.mode)


class MapSource(Protocol):
    """Provider of similarity maps for (model, sample, audio type) rows."""

    def get(self, model_id: str, sample_id: str, audio_type: AudioType) -> SimilarityMap: ...


def map_file_path(root: str | Path, model_id: str, sample_id: str, audio_type: AudioType) -> Path:
    return Path(root) / model_id / f"{sample_id}.{audio_type.value}.avsm"


class DiskMapSource:
    """Reads AVSM files named <root>/<model>/<sample_id>.<audio_type>.avsm,
    caching decoded maps for reuse across seeds."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._cache: dict[tuple[str, str, str], SimilarityMap] = {}

    def get(self, model_id: str, sample_id: str, audio_type: AudioType) -> SimilarityMap:
        key = (model_id, sample_id, audio_type.value)
        cached = self._cache.get(key)
        if cached is None:
            cached = read_map(map_file_path(self.root, model_id, sample_id, audio_type))
            self._cache[key] = cached
        return cached


class OracleMapSource:
    """Computes oracle maps on the fly instead of reading files."""

    def __init__(
        self,
        oracles: Mapping[str, OracleModel],
        samples: Sequence[Sample],
        height: int,
        width: int,
        min_agreement: int = 1,
    ):
        self.oracles = dict(oracles)
        self._samples = {s.sample_id: s for s in samples}
        self.height = height
        self.width = width
        self.min_agreement = min_agreement

    def get(self, model_id: str, sample_id: str, audio_type: AudioType) -> SimilarityMap:
        try:
            oracle = self.oracles[model_id]
        except KeyError:
            raise ValidationError(f"unknown oracle model {model_id!r}") from None
        try:
            sample = self._samples[sample_id]
        except KeyError:
            raise ValidationError(f"unknown sample {sample_id!r}") from None
        return oracle_map(oracle, sample, audio_type, self.height, self.width, self.min_agreement)
