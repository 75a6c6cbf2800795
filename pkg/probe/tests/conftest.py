"""Shared workspace: a tiny dataset with real media plus an extended manifest.

The primary package (avlocbench) is used here as the test harness that
produces inputs and verifies outputs; the probe's runtime code never
imports it.
"""

import numpy as np
import pytest
from PIL import Image

from avlocbench.audio import gen_noise, write_wav
from avlocbench.cli import main as avlocbench_main
from avlocbench.fixtures import FixtureSpec, synth_manifest
from avlocbench.manifest import save_manifest, save_taxonomy
from avlocbench.rng import SeedStream

from avlocprobe.models import save_reference_checkpoint

SAMPLE_RATE = 8000
IMAGE_SIZE = 64
N_SAMPLES = 6


@pytest.fixture(scope="session")
def media_workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("media")
    spec = FixtureSpec(
        n_samples=N_SAMPLES, grid_height=8, grid_width=8, n_categories=3, seed=1
    )
    samples, taxonomy = synth_manifest(spec)
    save_manifest(samples, root / "manifest.jsonl")
    save_taxonomy(taxonomy, root / "taxonomy.json")

    (root / "images").mkdir()
    (root / "audio").mkdir()
    rng = np.random.RandomState(7)
    for sample in samples:
        pixels = rng.randint(0, 256, size=(IMAGE_SIZE, IMAGE_SIZE, 3), dtype=np.uint8)
        Image.fromarray(pixels).save(root / sample.image_ref)
        buffer = gen_noise(sample.duration_s, SAMPLE_RATE, SeedStream(9, hash(sample.sample_id) & 0xFFFF))
        write_wav(buffer, root / sample.audio_ref)

    code = avlocbench_main(
        [
            "extend",
            "--manifest", str(root / "manifest.jsonl"),
            "--taxonomy", str(root / "taxonomy.json"),
            "--seed", "0",
            "--sample-rate", str(SAMPLE_RATE),
            "--out", str(root),
        ]
    )
    assert code == 0
    return root


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    path = tmp_path_factory.mktemp("ckpt") / "two_tower.pt"
    save_reference_checkpoint(path, weight_seed=3)
    return path
