"""Extended-manifest construction: one positive row plus three negatives.

For every positive pairing in the input manifest, in order, four rows are
emitted: positive, silence, noise, offscreen.  Offscreen sources are drawn
with per-row seed streams, so the result is a pure function of
(manifest, taxonomy, seed) and identical regardless of execution schedule.
"""

from __future__ import annotations

from typing import Sequence

from .audio import assign_offscreen
from .errors import TaxonomyError
from .manifest import (
    AudioType,
    ExtendedManifest,
    ExtendedSample,
    Sample,
    Taxonomy,
    validate_taxonomy_coverage,
)
from .rng import SeedStream, StreamDomain, make_stream_key

NEGATIVE_AUDIO_DIR = "negative_audio"


def negative_audio_ref(sample_id: str, audio_type: AudioType) -> str:
    """Manifest-relative path where `extend` materializes a synthetic clip."""
    return f"{NEGATIVE_AUDIO_DIR}/{sample_id}.{audio_type.value}.wav"


def noise_stream(seed: int, pairing_index: int) -> SeedStream:
    """The stream that synthesizes noise for the pairing at this index."""
    return SeedStream(seed, make_stream_key(StreamDomain.NOISE, pairing_index))


def extend_manifest(
    samples: Sequence[Sample],
    taxonomy: Taxonomy,
    seed: int,
    dataset_id: str = "dataset",
) -> ExtendedManifest:
    """Pair every sample with its positive audio and the three negatives.

    Raises TaxonomyError if any fine category is unmapped, and
    ValidationError if some sample has no offscreen candidate in a
    different broad category.
    """
    uncovered = validate_taxonomy_coverage(samples, taxonomy)
    if uncovered:
        raise TaxonomyError(f"taxonomy does not cover fine categories: {uncovered}")
    rows: list[ExtendedSample] = []
    by_id = {s.sample_id: s for s in samples}
    for index, sample in enumerate(samples):
        resolved = sample.with_broad_category(taxonomy)
        rows.append(
            ExtendedSample(
                base=resolved,
                audio_type=AudioType.POSITIVE,
                effective_audio_ref=resolved.audio_ref,
                source_sample_id=None,
                seed=seed,
            )
        )
        for audio_type in (AudioType.SILENCE, AudioType.NOISE):
            rows.append(
                ExtendedSample(
                    base=resolved,
                    audio_type=audio_type,
                    effective_audio_ref=negative_audio_ref(resolved.sample_id, audio_type),
                    source_sample_id=None,
                    seed=seed,
                )
            )
        stream = SeedStream(seed, make_stream_key(StreamDomain.OFFSCREEN, index))
        source_id = assign_offscreen(resolved, samples, taxonomy, stream)
        rows.append(
            ExtendedSample(
                base=resolved,
                audio_type=AudioType.OFFSCREEN,
                effective_audio_ref=by_id[source_id].audio_ref,
                source_sample_id=source_id,
                seed=seed,
            )
        )
    return ExtendedManifest(rows=tuple(rows), dataset_id=dataset_id, seed=seed)
