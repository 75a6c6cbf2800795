"""Test-set manifest data model: samples, taxonomy, JSONL round-trip, stats.

Manifests are line-delimited JSON, one sample per line.  Extended manifests
carry the same fields plus the audio pairing columns (`audio_type`,
`effective_audio`, `source_sample_id`, `seed`).  A taxonomy file is a single
JSON object mapping fine category names to one of the eight broad labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from .errors import ManifestError, TaxonomyError


class BroadCategory(str, Enum):
    """The eight coarse semantic groups used to pick offscreen audio."""

    MUSIC = "music"
    HUMAN_VOICE = "human-voice"
    VEHICLES = "vehicles"
    MACHINES = "machines"
    ANIMALS = "animals"
    WEAPONS = "weapons"
    NATURE = "nature"
    OTHERS = "others"


class AudioType(str, Enum):
    POSITIVE = "positive"
    SILENCE = "silence"
    NOISE = "noise"
    OFFSCREEN = "offscreen"


NEGATIVE_AUDIO_TYPES: tuple[AudioType, ...] = (
    AudioType.SILENCE,
    AudioType.NOISE,
    AudioType.OFFSCREEN,
)


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in pixel units, half-open on both axes."""

    x0: float
    y0: float
    x1: float
    y1: float


@dataclass(frozen=True)
class RleMask:
    """Row-major run-length mask: alternating runs of 0s then 1s over size."""

    size: tuple[int, int]
    counts: tuple[int, ...]


Region = Union[Box, RleMask]
AnnotatorRegions = tuple[Region, ...]


@dataclass(frozen=True)
class Taxonomy:
    """Total mapping from fine category names to broad categories."""

    mapping: Mapping[str, BroadCategory]

    def __len__(self) -> int:
        return len(self.mapping)

    def __contains__(self, fine_category: str) -> bool:
        return fine_category in self.mapping

    def lookup(self, fine_category: str) -> BroadCategory:
        try:
            return self.mapping[fine_category]
        except KeyError:
            raise TaxonomyError(f"fine category not covered by taxonomy: {fine_category!r}") from None


@dataclass(frozen=True)
class Sample:
    """One positive image-audio pairing with its ground-truth annotations."""

    sample_id: str
    image_ref: str
    audio_ref: str
    duration_s: float
    fine_category: str
    gt_annotations: tuple[AnnotatorRegions, ...]
    broad_category: BroadCategory | None = None

    def __post_init__(self) -> None:
        if not self.duration_s > 0:
            raise ManifestError(f"sample {self.sample_id!r}: duration_s must be > 0, got {self.duration_s}")

    def with_broad_category(self, taxonomy: Taxonomy) -> "Sample":
        return replace(self, broad_category=taxonomy.lookup(self.fine_category))


@dataclass(frozen=True)
class ExtendedSample:
    """One evaluation row: a sample paired with one audio condition."""

    base: Sample
    audio_type: AudioType
    effective_audio_ref: str
    source_sample_id: str | None
    seed: int

    def __post_init__(self) -> None:
        if (self.audio_type is AudioType.OFFSCREEN) != (self.source_sample_id is not None):
            raise ManifestError(
                f"sample {self.base.sample_id!r}: source_sample_id must be set "
                "for offscreen rows and only for them"
            )


@dataclass(frozen=True)
class ExtendedManifest:
    rows: tuple[ExtendedSample, ...]
    dataset_id: str
    seed: int


# --- JSONL parsing -------------------------------------------------------

_SAMPLE_FIELDS = {"sample_id", "image", "audio", "duration_s", "fine_category", "annotations"}
_EXTENDED_FIELDS = _SAMPLE_FIELDS | {"audio_type", "effective_audio", "source_sample_id", "seed"}


def _parse_region(obj: object, where: str) -> Region:
    if not isinstance(obj, dict):
        raise ManifestError(f"{where}: region must be an object, got {type(obj).__name__}")
    if set(obj) == {"x0", "y0", "x1", "y1"}:
        try:
            return Box(float(obj["x0"]), float(obj["y0"]), float(obj["x1"]), float(obj["y1"]))
        except (TypeError, ValueError) as e:
            raise ManifestError(f"{where}: bad box coordinates: {e}") from e
    if set(obj) == {"size", "counts"}:
        size = obj["size"]
        counts = obj["counts"]
        if (
            not isinstance(size, list)
            or len(size) != 2
            or not all(isinstance(v, int) and v > 0 for v in size)
        ):
            raise ManifestError(f"{where}: mask size must be [height, width] of positive ints")
        if not isinstance(counts, list) or not all(isinstance(v, int) and v >= 0 for v in counts):
            raise ManifestError(f"{where}: mask counts must be non-negative ints")
        return RleMask((size[0], size[1]), tuple(counts))
    raise ManifestError(f"{where}: region must have keys x0,y0,x1,y1 or size,counts, got {sorted(obj)}")


def _parse_annotations(obj: object, where: str) -> tuple[AnnotatorRegions, ...]:
    if not isinstance(obj, list):
        raise ManifestError(f"{where}: annotations must be a list of per-annotator region lists")
    annotators = []
    for a_idx, regions in enumerate(obj):
        if not isinstance(regions, list):
            raise ManifestError(f"{where}: annotations[{a_idx}] must be a list of regions")
        annotators.append(tuple(_parse_region(r, f"{where}: annotations[{a_idx}]") for r in regions))
    return tuple(annotators)


def _parse_sample(record: dict, where: str, *, extended: bool) -> Sample:
    allowed = _EXTENDED_FIELDS if extended else _SAMPLE_FIELDS
    unknown = set(record) - allowed
    if unknown:
        raise ManifestError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = _SAMPLE_FIELDS - set(record)
    if missing:
        raise ManifestError(f"{where}: missing field(s) {sorted(missing)}")
    for key in ("sample_id", "image", "audio", "fine_category"):
        if not isinstance(record[key], str) or not record[key]:
            raise ManifestError(f"{where}: field {key!r} must be a non-empty string")
    duration = record["duration_s"]
    if not isinstance(duration, (int, float)) or isinstance(duration, bool):
        raise ManifestError(f"{where}: duration_s must be a number")
    if not duration > 0:
        raise ManifestError(f"{where}: duration_s must be > 0, got {duration}")
    return Sample(
        sample_id=record["sample_id"],
        image_ref=record["image"],
        audio_ref=record["audio"],
        duration_s=float(duration),
        fine_category=record["fine_category"],
        gt_annotations=_parse_annotations(record["annotations"], where),
    )


def _iter_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ManifestError(f"{path}: line {line_no}: invalid JSON: {e.msg}") from e
            if not isinstance(record, dict):
                raise ManifestError(f"{path}: line {line_no}: record must be a JSON object")
            yield line_no, record


def load_manifest(path: str | Path) -> list[Sample]:
    """Load a positive-sample manifest, preserving file order.

    Raises ManifestError with the offending line number on any schema
    violation, including duplicate sample ids and unknown fields.
    """
    path = Path(path)
    samples: list[Sample] = []
    seen: set[str] = set()
    for line_no, record in _iter_jsonl(path):
        where = f"{path}: line {line_no}"
        try:
            sample = _parse_sample(record, where, extended=False)
        except ManifestError:
            raise
        if sample.sample_id in seen:
            raise ManifestError(f"{where}: duplicate sample_id {sample.sample_id!r}")
        seen.add(sample.sample_id)
        samples.append(sample)
    return samples


def _region_to_json(region: Region) -> dict:
    if isinstance(region, Box):
        return {"x0": region.x0, "y0": region.y0, "x1": region.x1, "y1": region.y1}
    return {"size": list(region.size), "counts": list(region.counts)}


def _sample_to_json(sample: Sample) -> dict:
    return {
        "sample_id": sample.sample_id,
        "image": sample.image_ref,
        "audio": sample.audio_ref,
        "duration_s": sample.duration_s,
        "fine_category": sample.fine_category,
        "annotations": [[_region_to_json(r) for r in annotator] for annotator in sample.gt_annotations],
    }


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def save_manifest(samples: Sequence[Sample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sample in samples:
            fh.write(_dump_line(_sample_to_json(sample)) + "\n")


def save_extended_manifest(extended: ExtendedManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in extended.rows:
            record = _sample_to_json(row.base)
            record["audio_type"] = row.audio_type.value
            record["effective_audio"] = row.effective_audio_ref
            record["source_sample_id"] = row.source_sample_id
            record["seed"] = row.seed
            fh.write(_dump_line(record) + "\n")


def load_extended_manifest(path: str | Path, dataset_id: str | None = None) -> ExtendedManifest:
    path = Path(path)
    rows: list[ExtendedSample] = []
    seed: int | None = None
    for line_no, record in _iter_jsonl(path):
        where = f"{path}: line {line_no}"
        base = _parse_sample(record, where, extended=True)
        for key in ("audio_type", "effective_audio", "seed"):
            if key not in record:
                raise ManifestError(f"{where}: missing field {key!r}")
        try:
            audio_type = AudioType(record["audio_type"])
        except ValueError:
            raise ManifestError(f"{where}: unknown audio_type {record['audio_type']!r}") from None
        row_seed = record["seed"]
        if not isinstance(row_seed, int) or isinstance(row_seed, bool) or row_seed < 0:
            raise ManifestError(f"{where}: seed must be a non-negative integer")
        if seed is None:
            seed = row_seed
        rows.append(
            ExtendedSample(
                base=base,
                audio_type=audio_type,
                effective_audio_ref=record["effective_audio"],
                source_sample_id=record.get("source_sample_id"),
                seed=row_seed,
            )
        )
    return ExtendedManifest(
        rows=tuple(rows),
        dataset_id=dataset_id or path.stem,
        seed=seed if seed is not None else 0,
    )


# --- Taxonomy ------------------------------------------------------------

def load_taxonomy(path: str | Path) -> Taxonomy:
    """Load a fine-to-broad mapping; every value must be one of the 8 labels."""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise TaxonomyError(f"{path}: invalid JSON: {e.msg}") from e
    if not isinstance(data, dict):
        raise TaxonomyError(f"{path}: taxonomy must be a JSON object")
    mapping: dict[str, BroadCategory] = {}
    for fine, broad in data.items():
        if fine in mapping:
            raise TaxonomyError(f"{path}: duplicate fine category {fine!r}")
        try:
            mapping[fine] = BroadCategory(broad)
        except ValueError:
            valid = ", ".join(c.value for c in BroadCategory)
            raise TaxonomyError(
                f"{path}: fine category {fine!r} maps to unknown broad label {broad!r} (valid: {valid})"
            ) from None
    return Taxonomy(mapping)


def save_taxonomy(taxonomy: Taxonomy, path: str | Path) -> None:
    data = {fine: broad.value for fine, broad in taxonomy.mapping.items()}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def validate_taxonomy_coverage(samples: Sequence[Sample], taxonomy: Taxonomy) -> list[str]:
    """Fine categories present in the manifest but absent from the taxonomy."""
    uncovered = {s.fine_category for s in samples if s.fine_category not in taxonomy}
    return sorted(uncovered)


# --- Stats ---------------------------------------------------------------

@dataclass(frozen=True)
class ManifestStats:
    images: int
    positive_pairings: int
    rows: int
    positive_audio_s: float
    negative_audio_s: Mapping[str, float]
    negative_audio_total_s: float

    def to_json_dict(self) -> dict:
        return {
            "images": self.images,
            "positive_pairings": self.positive_pairings,
            "rows": self.rows,
            "positive_audio_s": self.positive_audio_s,
            "positive_audio_h": self.positive_audio_s / 3600.0,
            "negative_audio_s": dict(self.negative_audio_s),
            "negative_audio_total_s": self.negative_audio_total_s,
            "negative_audio_total_h": self.negative_audio_total_s / 3600.0,
        }


def manifest_stats(extended: ExtendedManifest) -> ManifestStats:
    """Count images, pairings and audio durations of an extended manifest.

    Per-type negative totals are summed in row order; the grand total is the
    left-to-right sum of the three per-type totals, which keeps the exact
    3x relationship with the positive total when all rows are present.
    """
    images = {row.base.image_ref for row in extended.rows if row.audio_type is AudioType.POSITIVE}
    positive_rows = [row for row in extended.rows if row.audio_type is AudioType.POSITIVE]
    per_type: dict[str, float] = {}
    for audio_type in NEGATIVE_AUDIO_TYPES:
        total = 0.0
        for row in extended.rows:
            if row.audio_type is audio_type:
                total += row.base.duration_s
        per_type[audio_type.value] = total
    negative_total = (
        per_type[AudioType.SILENCE.value]
        + per_type[AudioType.NOISE.value]
        + per_type[AudioType.OFFSCREEN.value]
    )
    positive_total = 0.0
    for row in positive_rows:
        positive_total += row.base.duration_s
    return ManifestStats(
        images=len(images),
        positive_pairings=len(positive_rows),
        rows=len(extended.rows),
        positive_audio_s=positive_total,
        negative_audio_s=per_type,
        negative_audio_total_s=negative_total,
    )
