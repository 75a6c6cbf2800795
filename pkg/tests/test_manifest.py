import dataclasses
import json
from importlib import resources

import pytest

from avlocbench.errors import ManifestError, TaxonomyError, ValidationError
from avlocbench.extend import extend_manifest
from avlocbench.manifest import (
    AudioType,
    Box,
    BroadCategory,
    RleMask,
    Sample,
    Taxonomy,
    load_manifest,
    load_taxonomy,
    manifest_stats,
    save_extended_manifest,
    save_manifest,
    validate_taxonomy_coverage,
)


def make_sample(i: int, fine: str, duration: float = 10.0) -> Sample:
    return Sample(
        sample_id=f"s{i:04d}",
        image_ref=f"images/s{i:04d}.jpg",
        audio_ref=f"audio/s{i:04d}.wav",
        duration_s=duration,
        fine_category=fine,
        gt_annotations=((Box(1.0, 1.0, 3.0, 3.0),),),
    )


TAXONOMY = Taxonomy(
    {
        "dog barking": BroadCategory.ANIMALS,
        "female singing": BroadCategory.HUMAN_VOICE,
        "train whistling": BroadCategory.VEHICLES,
        "playing piano": BroadCategory.MUSIC,
    }
)
FINES = sorted(TAXONOMY.mapping)


def write_manifest_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def sample_line(i: int, fine: str = "dog barking", duration: float = 10.0, **extra) -> str:
    record = {
        "sample_id": f"s{i:04d}",
        "image": f"images/s{i:04d}.jpg",
        "audio": f"audio/s{i:04d}.wav",
        "duration_s": duration,
        "fine_category": fine,
        "annotations": [[{"x0": 1.0, "y0": 1.0, "x1": 3.0, "y1": 3.0}]],
    }
    record.update(extra)
    return json.dumps(record)


class TestLoadManifest:
    def test_four_lines_in_order(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_manifest_lines(path, [sample_line(i) for i in range(4)])
        samples = load_manifest(path)
        assert [s.sample_id for s in samples] == [f"s{i:04d}" for i in range(4)]

    def test_zero_duration_rejected_with_line_number(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_manifest_lines(path, [sample_line(0), sample_line(1, duration=0.0)])
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(path)

    def test_duplicate_sample_id(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_manifest_lines(path, [sample_line(0), sample_line(0)])
        with pytest.raises(ManifestError, match="duplicate"):
            load_manifest(path)

    def test_unknown_field(self, tmp_path):
        path = tmp_path / "m.jsonl"
        write_manifest_lines(path, [sample_line(0, color="red")])
        with pytest.raises(ManifestError, match="unknown field"):
            load_manifest(path)

    def test_bad_json_names_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(sample_line(0) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(ManifestError, match="line 2"):
            load_manifest(path)

    def test_rle_annotation_roundtrip(self, tmp_path):
        path = tmp_path / "m.jsonl"
        rle = {"size": [2, 2], "counts": [1, 2, 1]}
        write_manifest_lines(path, [sample_line(0, annotations=[[rle]])])
        (sample,) = load_manifest(path)
        (regions,) = sample.gt_annotations
        assert regions == (RleMask(size=(2, 2), counts=(1, 2, 1)),)

    def test_save_load_roundtrip_field_by_field(self, tmp_path):
        samples = [make_sample(i, FINES[i % len(FINES)], duration=3.5 + i) for i in range(7)]
        path = tmp_path / "m.jsonl"
        save_manifest(samples, path)
        reloaded = load_manifest(path)
        assert len(reloaded) == len(samples)
        for original, loaded in zip(samples, reloaded):
            for field in dataclasses.fields(Sample):
                assert getattr(original, field.name) == getattr(loaded, field.name), field.name


class TestTaxonomy:
    def test_load_two_entries(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"dog barking": "animals", "female singing": "human-voice"}))
        taxonomy = load_taxonomy(path)
        assert len(taxonomy) == 2
        assert taxonomy.lookup("dog barking") is BroadCategory.ANIMALS

    def test_unknown_broad_label(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"fern rustling": "plants"}))
        with pytest.raises(TaxonomyError, match="plants"):
            load_taxonomy(path)

    def test_exactly_eight_broad_labels(self):
        assert len(BroadCategory) == 8

    def test_shipped_example_groups_dogs_under_animals(self):
        with resources.files("avlocbench.data").joinpath("example_taxonomy.json").open() as fh:
            data = json.load(fh)
        for fine in ("dog barking", "dog bow-wow", "dog howling"):
            assert data[fine] == "animals"
        # every broad label appears at least once
        assert {BroadCategory(v) for v in data.values()} == set(BroadCategory)

    def test_coverage_all_covered(self):
        samples = [make_sample(i, FINES[i % len(FINES)]) for i in range(6)]
        assert validate_taxonomy_coverage(samples, TAXONOMY) == []

    def test_coverage_one_missing(self):
        samples = [make_sample(0, "dog barking"), make_sample(1, "cat meowing")]
        assert validate_taxonomy_coverage(samples, TAXONOMY) == ["cat meowing"]

    def test_coverage_221_categories_3_unmapped(self):
        fines = [f"category {i:03d}" for i in range(221)]
        broads = list(BroadCategory)
        mapping = {f: broads[i % 8] for i, f in enumerate(fines)}
        missing = {fines[13], fines[140], fines[220]}
        for f in missing:
            del mapping[f]
        samples = [make_sample(i, f) for i, f in enumerate(fines)]
        uncovered = validate_taxonomy_coverage(samples, Taxonomy(mapping))
        assert uncovered == sorted(missing)  # independent set-difference oracle


class TestExtend:
    def test_four_positives_sixteen_rows(self):
        samples = [make_sample(i, FINES[i % 2]) for i in range(4)]
        extended = extend_manifest(samples, TAXONOMY, seed=0)
        assert len(extended.rows) == 16
        types = [row.audio_type for row in extended.rows[:4]]
        assert types == [AudioType.POSITIVE, AudioType.SILENCE, AudioType.NOISE, AudioType.OFFSCREEN]

    def test_negative_duration_three_times_positive(self):
        samples = [make_sample(i, FINES[i % 3], duration=2.5 + 0.7 * i) for i in range(9)]
        stats = manifest_stats(extend_manifest(samples, TAXONOMY, seed=1))
        assert stats.negative_audio_total_s == 3 * stats.positive_audio_s

    def test_offscreen_source_from_other_broad_category(self):
        samples = [make_sample(i, FINES[i % len(FINES)]) for i in range(12)]
        by_id = {s.sample_id: s for s in samples}
        extended = extend_manifest(samples, TAXONOMY, seed=3)
        for row in extended.rows:
            if row.audio_type is AudioType.OFFSCREEN:
                source = by_id[row.source_sample_id]
                assert TAXONOMY.lookup(source.fine_category) != TAXONOMY.lookup(row.base.fine_category)
                assert row.source_sample_id != row.base.sample_id

    def test_order_preserved_and_pure(self, tmp_path):
        samples = [make_sample(i, FINES[i % 2]) for i in range(6)]
        a = extend_manifest(samples, TAXONOMY, seed=7)
        b = extend_manifest(samples, TAXONOMY, seed=7)
        assert a == b
        positives = [row.base.sample_id for row in a.rows if row.audio_type is AudioType.POSITIVE]
        assert positives == [s.sample_id for s in samples]
        path_a, path_b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        save_extended_manifest(a, path_a)
        save_extended_manifest(b, path_b)
        assert path_a.read_bytes() == path_b.read_bytes()

    def test_uncovered_taxonomy_rejected(self):
        samples = [make_sample(0, "dog barking"), make_sample(1, "unheard-of thing")]
        with pytest.raises(TaxonomyError, match="unheard-of thing"):
            extend_manifest(samples, TAXONOMY, seed=0)

    def test_empty_offscreen_pool_rejected(self):
        samples = [make_sample(i, "dog barking") for i in range(3)]
        with pytest.raises(ValidationError, match="offscreen"):
            extend_manifest(samples, TAXONOMY, seed=0)

    def test_seed_changes_assignments(self):
        samples = [make_sample(i, FINES[i % len(FINES)]) for i in range(20)]
        picks = {}
        for seed in range(6):
            extended = extend_manifest(samples, TAXONOMY, seed=seed)
            picks[seed] = tuple(
                row.source_sample_id for row in extended.rows if row.audio_type is AudioType.OFFSCREEN
            )
        assert len(set(picks.values())) > 1


class TestStats:
    def test_four_positives_ten_seconds(self):
        samples = [make_sample(i, FINES[i % 2], duration=10.0) for i in range(4)]
        stats = manifest_stats(extend_manifest(samples, TAXONOMY, seed=0))
        assert stats.positive_audio_s == 40.0
        assert stats.negative_audio_total_s == 120.0
        assert stats.images == 4
        assert stats.rows == 16

    def test_two_pairings_per_image(self):
        # Three images, each appearing in two pairings with different audio.
        samples = []
        for i in range(3):
            for j in range(2):
                samples.append(
                    Sample(
                        sample_id=f"img{i}_audio{j}",
                        image_ref=f"images/img{i}.jpg",
                        audio_ref=f"audio/img{i}_{j}.wav",
                        duration_s=10.0,
                        fine_category=FINES[j],
                        gt_annotations=((Box(0.0, 0.0, 2.0, 2.0),),),
                    )
                )
        stats = manifest_stats(extend_manifest(samples, TAXONOMY, seed=0))
        assert stats.images == 3
        assert stats.positive_pairings == 6
        assert stats.rows == 24

    def test_stats_match_brute_force_recount(self):
        samples = [make_sample(i, FINES[i % len(FINES)], duration=1.0 + (i * 37 % 11) / 3) for i in range(17)]
        extended = extend_manifest(samples, TAXONOMY, seed=5)
        stats = manifest_stats(extended)
        # independent recount straight off the rows
        rows = list(extended.rows)
        assert stats.rows == len(rows)
        assert stats.positive_pairings == sum(r.audio_type is AudioType.POSITIVE for r in rows)
        assert stats.images == len({r.base.image_ref for r in rows})
        assert stats.positive_audio_s == pytest.approx(
            sum(r.base.duration_s for r in rows if r.audio_type is AudioType.POSITIVE)
        )
        for audio_type in (AudioType.SILENCE, AudioType.NOISE, AudioType.OFFSCREEN):
            assert stats.negative_audio_s[audio_type.value] == pytest.approx(
                sum(r.base.duration_s for r in rows if r.audio_type is audio_type)
            )
