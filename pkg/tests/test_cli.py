import json
import wave

import pytest

from avlocbench.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    code = run_cli(
        "synth-fixtures", "--samples", 12, "--grid", "8", "--categories", 3, "--seed", 4,
        "--out", root / "fixture",
    )
    assert code == 0
    return root


def _calibrate(workspace, out_name="thresholds.json"):
    fixture = workspace / "fixture"
    code = run_cli(
        "calibrate",
        "--manifest", fixture / "manifest.jsonl",
        "--maps", fixture / "maps",
        "--models", "perfect=raw-cosine,constant=normalized-unit,random=raw-cosine",
        "--out", workspace / out_name,
    )
    assert code == 0
    return workspace / out_name


class TestSynthFixtures:
    def test_creates_expected_layout(self, workspace):
        fixture = workspace / "fixture"
        assert (fixture / "manifest.jsonl").exists()
        assert (fixture / "taxonomy.json").exists()
        assert len(list((fixture / "maps" / "perfect").glob("*.avsm"))) == 48

    def test_bad_grid_is_validation_error(self, tmp_path):
        assert run_cli("synth-fixtures", "--samples", 4, "--grid", "not-a-grid", "--out", tmp_path) == 2


class TestExtend:
    def test_writes_rows_wavs_and_stats(self, workspace, tmp_path):
        fixture = workspace / "fixture"
        out = tmp_path / "ext"
        code = run_cli(
            "extend",
            "--manifest", fixture / "manifest.jsonl",
            "--taxonomy", fixture / "taxonomy.json",
            "--seed", 0,
            "--sample-rate", 8000,
            "--out", out,
        )
        assert code == 0
        lines = (out / "extended.jsonl").read_text().splitlines()
        assert len(lines) == 48
        first = json.loads(lines[0])
        assert first["audio_type"] == "positive"
        stats = json.loads((out / "stats.json").read_text())
        assert stats["rows"] == 48
        assert stats["negative_audio_total_s"] == 3 * stats["positive_audio_s"]
        wavs = sorted((out / "negative_audio").glob("*.wav"))
        assert len(wavs) == 24  # silence + noise per pairing
        with wave.open(str(wavs[0]), "rb") as reader:
            assert reader.getframerate() == 8000

    def test_missing_manifest_is_io_error(self, workspace, tmp_path):
        fixture = workspace / "fixture"
        code = run_cli(
            "extend",
            "--manifest", tmp_path / "absent.jsonl",
            "--taxonomy", fixture / "taxonomy.json",
            "--out", tmp_path / "x",
        )
        assert code == 1


class TestCalibrateEvaluateReport:
    def test_full_chain(self, workspace, tmp_path):
        fixture = workspace / "fixture"
        thresholds_path = _calibrate(workspace)
        thresholds = json.loads(thresholds_path.read_text())
        assert thresholds["perfect"]["threshold"] == 0.0
        assert thresholds["constant"]["threshold"] == 0.75
        assert thresholds["random"]["mode"] == "raw-cosine"

        out = tmp_path / "eval"
        code = run_cli(
            "evaluate",
            "--manifest", fixture / "manifest.jsonl",
            "--maps", fixture / "maps",
            "--thresholds", thresholds_path,
            "--taxonomy", fixture / "taxonomy.json",
            "--seeds", "0,1",
            "--out", out,
        )
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["models"]["perfect"]["mean"]["ciou_adap_at_half"] == 1.0

        table_path = tmp_path / "table.md"
        boxplot_path = tmp_path / "boxplot.json"
        cross_path = tmp_path / "cross.json"
        code = run_cli(
            "report",
            "--in", out / "summary.json",
            "--format", "markdown",
            "--out", table_path,
            "--boxplot-out", boxplot_path,
            "--cross-iou-out", cross_path,
        )
        assert code == 0
        table = table_path.read_text()
        assert "cIoU Adap." in table and "100.00" in table
        assert len(json.loads(boxplot_path.read_text())) == 12  # 3 models x 4 audio types
        cross = {row["model"]: row for row in json.loads(cross_path.read_text())}
        assert cross["perfect"]["neg_neg"] == 1.0
        assert cross["constant"]["pos_silence"] == 1.0

    def test_model_subset_and_unknown_model(self, workspace, tmp_path):
        fixture = workspace / "fixture"
        thresholds_path = _calibrate(workspace)
        out = tmp_path / "eval_subset"
        code = run_cli(
            "evaluate",
            "--manifest", fixture / "manifest.jsonl",
            "--maps", fixture / "maps",
            "--thresholds", thresholds_path,
            "--models", "perfect",
            "--seeds", "0",
            "--out", out,
        )
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert list(summary["models"]) == ["perfect"]
        assert (
            run_cli(
                "evaluate",
                "--manifest", fixture / "manifest.jsonl",
                "--maps", fixture / "maps",
                "--thresholds", thresholds_path,
                "--models", "ghost",
                "--seeds", "0",
                "--out", tmp_path / "nope",
            )
            == 2
        )

    def test_thresholds_calibrated_on_one_set_apply_to_another(self, workspace, tmp_path):
        # Calibrate on the module fixture, evaluate a differently-seeded
        # dataset with those thresholds unchanged.
        thresholds_path = _calibrate(workspace)
        other = tmp_path / "other_fixture"
        assert run_cli("synth-fixtures", "--samples", 10, "--grid", "8", "--categories", 3,
                       "--seed", 99, "--out", other) == 0
        out = tmp_path / "eval_other"
        code = run_cli(
            "evaluate",
            "--manifest", other / "manifest.jsonl",
            "--maps", other / "maps",
            "--thresholds", thresholds_path,
            "--seeds", "0",
            "--dataset-id", "other",
            "--out", out,
        )
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        calibrated = json.loads(thresholds_path.read_text())
        for model_id, entry in summary["models"].items():
            assert entry["threshold"] == calibrated[model_id]["threshold"]
        assert summary["dataset_id"] == "other"

    def test_bad_seeds_rejected(self, workspace, tmp_path):
        fixture = workspace / "fixture"
        thresholds_path = _calibrate(workspace)
        code = run_cli(
            "evaluate",
            "--manifest", fixture / "manifest.jsonl",
            "--maps", fixture / "maps",
            "--thresholds", thresholds_path,
            "--seeds", "zero",
            "--out", tmp_path / "x",
        )
        assert code == 2


class TestDeterminism:
    def test_extend_twice_byte_identical(self, workspace, tmp_path):
        fixture = workspace / "fixture"
        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            assert (
                run_cli(
                    "extend",
                    "--manifest", fixture / "manifest.jsonl",
                    "--taxonomy", fixture / "taxonomy.json",
                    "--seed", 3,
                    "--out", out,
                )
                == 0
            )
            outs.append(out)
        first, second = outs
        rels = sorted(p.relative_to(first) for p in first.rglob("*") if p.is_file())
        assert rels == sorted(p.relative_to(second) for p in second.rglob("*") if p.is_file())
        for rel in rels:
            assert (first / rel).read_bytes() == (second / rel).read_bytes(), rel
