"""Similarity maps, localization masks, consensus ground truth, AVSM files.

AVSM binary layout (14-byte header, little-endian):

    offset  size  field
    0       4     magic, ASCII "AVSM"
    4       1     version, currently 1
    5       1     mode: 0 = raw cosine in [-1, 1], 1 = normalized unit [0, 1]
    6       4     height (u32)
    10      4     width (u32)
    14      4*H*W float32 values, row-major

Binarization is strict: a pixel activates only when its value exceeds the
threshold.  A threshold at or above the map maximum therefore yields an
empty mask.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import MapFormatError, ValidationError
from .manifest import AnnotatorRegions, Box, RleMask

_MAGIC = b"AVSM"
_VERSION = 1
_HEADER = struct.Struct("<4sBBII")


class MapMode(str, Enum):
    RAW_COSINE = "raw-cosine"
    NORMALIZED_UNIT = "normalized-unit"

    @property
    def code(self) -> int:
        return 0 if self is MapMode.RAW_COSINE else 1

    @classmethod
    def from_code(cls, code: int) -> "MapMode":
        if code == 0:
            return cls.RAW_COSINE
        if code == 1:
            return cls.NORMALIZED_UNIT
        raise MapFormatError(f"unknown map mode code {code}")

    @property
    def value_range(self) -> tuple[float, float]:
        return (-1.0, 1.0) if self is MapMode.RAW_COSINE else (0.0, 1.0)


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class SimilarityMap:
    """Dense H x W float32 grid of audio-visual scores."""

    values: np.ndarray
    mode: MapMode

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValidationError(f"similarity map must be 2-D and non-empty, got shape {values.shape}")
        lo, hi = self.mode.value_range
        finite = np.isfinite(values).all()
        if not finite or values.min() < lo or values.max() > hi:
            raise ValidationError(f"values outside {self.mode.value} range [{lo}, {hi}]")
        object.__setattr__(self, "values", _freeze(values))

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True)
class LocalizationMap:
    """Binary claim of the sounding region, same grid as its source map."""

    mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise ValidationError(f"localization map must be 2-D and non-empty, got shape {mask.shape}")
        object.__setattr__(self, "mask", _freeze(mask))

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.mask.shape[0]), int(self.mask.shape[1]))

    @property
    def active_pixels(self) -> int:
        return int(self.mask.sum())

    @property
    def is_empty(self) -> bool:
        return not self.mask.any()


@dataclass(frozen=True)
class ConsensusMask:
    """Pixels covered by at least `min_agreement` annotators."""

    mask: np.ndarray
    min_agreement: int

    def __post_init__(self) -> None:
        if self.min_agreement < 1:
            raise ValidationError(f"min_agreement must be >= 1, got {self.min_agreement}")
        mask = np.ascontiguousarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise ValidationError(f"consensus mask must be 2-D, got shape {mask.shape}")
        object.__setattr__(self, "mask", _freeze(mask))

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.mask.shape[0]), int(self.mask.shape[1]))

    @property
    def area(self) -> int:
        return int(self.mask.sum())


# --- AVSM file format ----------------------------------------------------

def write_map(similarity: SimilarityMap, path: str | Path) -> None:
    header = _HEADER.pack(_MAGIC, _VERSION, similarity.mode.code, similarity.height, similarity.width)
    payload = similarity.values.astype("<f4", copy=False).tobytes()
    Path(path).write_bytes(header + payload)


def read_map(path: str | Path) -> SimilarityMap:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise MapFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, mode_code, height, width = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise MapFormatError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise MapFormatError(f"{path}: unsupported version {version}")
    mode = MapMode.from_code(mode_code)
    if height < 1 or width < 1:
        raise MapFormatError(f"{path}: degenerate dimensions {height}x{width}")
    expected = _HEADER.size + 4 * height * width
    if len(raw) != expected:
        raise MapFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(height, width)
    try:
        return SimilarityMap(values=values, mode=mode)
    except ValidationError as e:
        raise MapFormatError(f"{path}: {e}") from e


# --- Binarization --------------------------------------------------------

def binarize_threshold(similarity: SimilarityMap, threshold: float) -> LocalizationMap:
    """Strictly-greater-than threshold mask."""
    return LocalizationMap(similarity.values > threshold)


def binarize_top_m(similarity: SimilarityMap, m: int) -> LocalizationMap:
    """Activate exactly min(m, H*W) pixels: highest values first, ties by
    ascending row-major index."""
    if m < 0:
        raise ValidationError(f"m must be non-negative, got {m}")
    flat = similarity.values.ravel()
    m = min(m, flat.size)
    mask = np.zeros(flat.size, dtype=bool)
    if m:
        order = np.argsort(-flat, kind="stable")
        mask[order[:m]] = True
    return LocalizationMap(mask.reshape(similarity.shape))


def max_value(similarity: SimilarityMap) -> float:
    return float(similarity.values.max())


# --- Consensus ground truth ----------------------------------------------

def _scaled_halfopen_range(lo: float, hi: float, scale: float, limit: int) -> range:
    start = max(0, math.ceil(lo * scale))
    stop = min(limit, math.ceil(hi * scale))
    return range(start, max(start, stop))


def _rasterize_box(box: Box, height: int, width: int, src_size: tuple[int, int] | None) -> np.ndarray:
    sy = height / src_size[0] if src_size else 1.0
    sx = width / src_size[1] if src_size else 1.0
    out = np.zeros((height, width), dtype=bool)
    rows = _scaled_halfopen_range(box.y0, box.y1, sy, height)
    cols = _scaled_halfopen_range(box.x0, box.x1, sx, width)
    if rows and cols:
        out[rows.start : rows.stop, cols.start : cols.stop] = True
    return out


def _decode_rle(mask: RleMask) -> np.ndarray:
    h, w = mask.size
    total = h * w
    if sum(mask.counts) != total:
        raise ValidationError(f"RLE counts sum to {sum(mask.counts)}, expected {total}")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False  # runs alternate starting with zeros
    for run in mask.counts:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(h, w)


def _rasterize_rle(mask: RleMask, height: int, width: int) -> np.ndarray:
    decoded = _decode_rle(mask)
    src_h, src_w = decoded.shape
    if (src_h, src_w) == (height, width):
        return decoded
    # Nearest-neighbour resample through pixel centres.
    rows = np.minimum((np.arange(height) + 0.5) * src_h / height, src_h - 1).astype(int)
    cols = np.minimum((np.arange(width) + 0.5) * src_w / width, src_w - 1).astype(int)
    return decoded[np.ix_(rows, cols)]


def rasterize_regions(
    regions: AnnotatorRegions,
    height: int,
    width: int,
    src_size: tuple[int, int] | None = None,
) -> np.ndarray:
    """Union of one annotator's regions on an H x W grid."""
    out = np.zeros((height, width), dtype=bool)
    for region in regions:
        if isinstance(region, Box):
            out |= _rasterize_box(region, height, width, src_size)
        else:
            out |= _rasterize_rle(region, height, width)
    return out


def consensus_from_annotations(
    annotations: Sequence[AnnotatorRegions],
    height: int,
    width: int,
    min_agreement: int = 1,
    src_size: tuple[int, int] | None = None,
) -> ConsensusMask:
    """Pixels covered by at least `min_agreement` annotators' region unions.

    Box coordinates are interpreted on the target grid unless `src_size`
    gives the native annotation resolution to scale from.
    """
    if len(annotations) == 0:
        raise ValidationError("consensus requires at least one annotator")
    if min_agreement < 1:
        raise ValidationError(f"min_agreement must be >= 1, got {min_agreement}")
    if min_agreement > len(annotations):
        raise ValidationError(
            f"min_agreement {min_agreement} exceeds annotator count {len(annotations)}"
        )
    counts = np.zeros((height, width), dtype=np.int32)
    for regions in annotations:
        counts += rasterize_regions(regions, height, width, src_size)
    return ConsensusMask(mask=counts >= min_agreement, min_agreement=min_agreement)
