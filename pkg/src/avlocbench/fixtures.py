"""Desk-scale synthetic datasets: manifest, taxonomy, and oracle map files.

Everything is derived from a single seed, so regenerating a fixture yields
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import ValidationError
from .manifest import (
    AudioType,
    Box,
    BroadCategory,
    Sample,
    Taxonomy,
    save_manifest,
    save_taxonomy,
)
from .oracles import OracleKind, OracleModel, map_file_path, oracle_map
from .rng import SeedStream, StreamDomain, make_stream_key
from .simmap import write_map

DEFAULT_ORACLES: Mapping[str, OracleModel] = {
    "perfect": OracleModel(OracleKind.PERFECT),
    "constant": OracleModel(OracleKind.CONSTANT, constant_level=0.9),
    "random": OracleModel(OracleKind.RANDOM, seed=0),
}


@dataclass(frozen=True)
class FixtureSpec:
    n_samples: int
    grid_height: int
    grid_width: int
    n_categories: int
    seed: int

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValidationError("fixtures need at least 2 samples")
        if not 2 <= self.n_categories <= len(BroadCategory):
            raise ValidationError(
                f"n_categories must be within [2, {len(BroadCategory)}], got {self.n_categories}"
            )
        if self.grid_height < 2 or self.grid_width < 2:
            raise ValidationError("grid must be at least 2x2")


def _fixture_box(stream: SeedStream, height: int, width: int) -> Box:
    # Boxes are in map coordinates, at least 1x1, never the full grid.
    u = stream.uniforms(4)
    box_h = 1 + int(u[0] * (height - 1))
    box_w = 1 + int(u[1] * (width - 1))
    y0 = int(u[2] * (height - box_h + 1))
    x0 = int(u[3] * (width - box_w + 1))
    return Box(x0=float(x0), y0=float(y0), x1=float(x0 + box_w), y1=float(y0 + box_h))


def synth_manifest(spec: FixtureSpec) -> tuple[list[Sample], Taxonomy]:
    """Seeded samples cycling through the first n_categories broad labels."""
    broads = list(BroadCategory)[: spec.n_categories]
    mapping = {f"synthetic source {i:02d}": broads[i % len(broads)] for i in range(spec.n_categories)}
    taxonomy = Taxonomy(mapping)
    fines = sorted(mapping)
    samples = []
    for i in range(spec.n_samples):
        stream = SeedStream(spec.seed, make_stream_key(StreamDomain.FIXTURE, i))
        duration = round(1.0 + 9.0 * stream.uniforms(1, start=100)[0], 3)
        samples.append(
            Sample(
                sample_id=f"s{i:04d}",
                image_ref=f"images/s{i:04d}.jpg",
                audio_ref=f"audio/s{i:04d}.wav",
                duration_s=duration,
                fine_category=fines[i % len(fines)],
                gt_annotations=((_fixture_box(stream, spec.grid_height, spec.grid_width),),),
            )
        )
    return samples, taxonomy


def synth_fixtures(
    spec: FixtureSpec,
    out_dir: str | Path,
    oracles: Mapping[str, OracleModel] = DEFAULT_ORACLES,
    min_agreement: int = 1,
) -> Path:
    """Write manifest.jsonl, taxonomy.json, fixture.json and AVSM maps.

    Maps land in <out>/maps/<model>/<sample_id>.<audio_type>.avsm, one per
    oracle model and audio condition.  Returns the output directory.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples, taxonomy = synth_manifest(spec)
    save_manifest(samples, out / "manifest.jsonl")
    save_taxonomy(taxonomy, out / "taxonomy.json")

    maps_root = out / "maps"
    for model_id, oracle in sorted(oracles.items()):
        (maps_root / model_id).mkdir(parents=True, exist_ok=True)
        for sample in samples:
            for audio_type in AudioType:
                similarity = oracle_map(
                    oracle, sample, audio_type, spec.grid_height, spec.grid_width, min_agreement
                )
                write_map(similarity, map_file_path(maps_root, model_id, sample.sample_id, audio_type))

    meta = {
        "grid": [spec.grid_height, spec.grid_width],
        "seed": spec.seed,
        "n_samples": spec.n_samples,
        "n_categories": spec.n_categories,
        "models": {
            model_id: {
                "kind": oracle.kind.value,
                "mode": oracle.mode.value,
                "constant_level": oracle.constant_level,
                "seed": oracle.seed,
            }
            for model_id, oracle in sorted(oracles.items())
        },
    }
    with open(out / "fixture.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return out
