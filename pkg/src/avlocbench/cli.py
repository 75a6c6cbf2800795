"""Command-line interface: extend, calibrate, evaluate, report, synth-fixtures.

Exit codes: 0 success, 2 validation/config error, 1 I/O error.  All
randomness flows from --seed / --seeds arguments; outputs are deterministic
functions of the inputs and flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .audio import gen_noise, gen_silence, write_wav
from .calibration import load_thresholds, save_thresholds
from .errors import ValidationError
from .extend import extend_manifest, negative_audio_ref, noise_stream
from .fixtures import DEFAULT_ORACLES, FixtureSpec, synth_fixtures
from .harness import (
    ModelSpec,
    RunConfig,
    calibrate_models,
    run_evaluation,
    write_outputs,
)
from .manifest import (
    AudioType,
    load_manifest,
    load_taxonomy,
    manifest_stats,
    save_extended_manifest,
)
from .oracles import DiskMapSource
from .report import export_boxplot, export_cross_iou, load_summary, render_table
from .simmap import MapMode


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise ValidationError(f"--seeds must be a comma-separated list of integers, got {text!r}") from None
    if not seeds:
        raise ValidationError("--seeds must name at least one seed")
    if any(s < 0 for s in seeds):
        raise ValidationError(f"seeds must be non-negative, got {seeds}")
    return seeds


def _parse_models(text: str) -> list[ModelSpec]:
    specs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValidationError(f"--models entries must look like id=mode, got {part!r}")
        model_id, mode_text = part.split("=", 1)
        try:
            mode = MapMode(mode_text)
        except ValueError:
            valid = ", ".join(m.value for m in MapMode)
            raise ValidationError(f"unknown map mode {mode_text!r} (valid: {valid})") from None
        specs.append(ModelSpec(model_id=model_id, mode=mode))
    if not specs:
        raise ValidationError("--models must name at least one model")
    return specs


def _parse_grid(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        if len(parts) == 1:
            side = int(parts[0])
            return side, side
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ValidationError(f"--grid must be N or HxW, got {text!r}")


def _cmd_extend(args: argparse.Namespace) -> int:
    samples = load_manifest(args.manifest)
    taxonomy = load_taxonomy(args.taxonomy)
    dataset_id = args.dataset_id or Path(args.manifest).stem
    extended = extend_manifest(samples, taxonomy, args.seed, dataset_id)
    out = Path(args.out)
    (out / "negative_audio").mkdir(parents=True, exist_ok=True)
    save_extended_manifest(extended, out / "extended.jsonl")
    for index, sample in enumerate(samples):
        silence = gen_silence(sample.duration_s, args.sample_rate)
        write_wav(silence, out / negative_audio_ref(sample.sample_id, AudioType.SILENCE))
        noise = gen_noise(sample.duration_s, args.sample_rate, noise_stream(args.seed, index))
        write_wav(noise, out / negative_audio_ref(sample.sample_id, AudioType.NOISE))
    stats = manifest_stats(extended)
    with open(out / "stats.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(stats.to_json_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    print(f"extended {stats.positive_pairings} pairings into {stats.rows} rows at {out}")
    return 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    samples = load_manifest(args.manifest)
    models = _parse_models(args.models)
    calibration_set = args.calibration_set or Path(args.manifest).stem
    source = DiskMapSource(args.maps)
    table = calibrate_models(source, models, samples, calibration_set)
    save_thresholds(table, args.out)
    print(f"calibrated {len(table)} model(s) into {args.out}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    samples = load_manifest(args.manifest)
    thresholds = load_thresholds(args.thresholds)
    taxonomy = load_taxonomy(args.taxonomy) if args.taxonomy else None
    if args.models:
        wanted = [part.strip() for part in args.models.split(",") if part.strip()]
        missing = [m for m in wanted if m not in thresholds]
        if missing:
            raise ValidationError(f"models not present in thresholds file: {missing}")
        model_ids = wanted
    else:
        model_ids = list(thresholds)
    specs = tuple(ModelSpec(model_id, thresholds[model_id].mode) for model_id in model_ids)
    config = RunConfig(
        models=specs,
        seeds=_parse_seeds(args.seeds),
        dataset_id=args.dataset_id or Path(args.manifest).stem,
        min_agreement=args.min_agreement,
        workers=args.workers,
    )
    source = DiskMapSource(args.maps)
    result = run_evaluation(config, samples, thresholds, source, taxonomy)
    out = write_outputs(result, args.out)
    print(f"evaluated {len(specs)} model(s) x {len(config.seeds)} seed(s) into {out}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    summary = load_summary(args.infile)
    text = render_table(summary, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.boxplot_out:
        with open(args.boxplot_out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(export_boxplot(summary), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    if args.cross_iou_out:
        with open(args.cross_iou_out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(export_cross_iou(summary), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    return 0


def _cmd_synth_fixtures(args: argparse.Namespace) -> int:
    height, width = _parse_grid(args.grid)
    spec = FixtureSpec(
        n_samples=args.samples,
        grid_height=height,
        grid_width=width,
        n_categories=args.categories,
        seed=args.seed,
    )
    oracles = DEFAULT_ORACLES
    if args.models:
        wanted = [part.strip() for part in args.models.split(",") if part.strip()]
        unknown = [m for m in wanted if m not in DEFAULT_ORACLES]
        if unknown:
            raise ValidationError(f"unknown oracle model(s) {unknown}; valid: {sorted(DEFAULT_ORACLES)}")
        oracles = {model_id: DEFAULT_ORACLES[model_id] for model_id in wanted}
    out = synth_fixtures(spec, args.out, oracles)
    print(f"wrote fixture with {args.samples} samples to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avlocbench",
        description="Evaluate sound-source localization maps on positive and negative audio.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extend", help="build the extended manifest and synthetic negative audio")
    p.add_argument("--manifest", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-rate", type=int, default=16000)
    p.add_argument("--out", required=True)
    p.add_argument("--dataset-id", default=None)
    p.set_defaults(func=_cmd_extend)

    p = sub.add_parser("calibrate", help="compute per-model universal thresholds from negative maps")
    p.add_argument("--manifest", required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--models", required=True, help="comma list of id=mode entries")
    p.add_argument("--calibration-set", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("evaluate", help="run the seeded evaluation over stored similarity maps")
    p.add_argument("--manifest", required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--thresholds", required=True)
    p.add_argument("--seeds", default="0,1,2,3,4,5,6,7,8,9")
    p.add_argument("--models", default=None, help="subset of model ids (default: all in thresholds)")
    p.add_argument("--taxonomy", default=None, help="enables per-seed offscreen pairing records")
    p.add_argument("--min-agreement", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dataset-id", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="render the score table and plot-ready exports")
    p.add_argument("--in", dest="infile", required=True, help="summary.json from evaluate")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out", default=None, help="write the table here instead of stdout")
    p.add_argument("--boxplot-out", default=None)
    p.add_argument("--cross-iou-out", default=None)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth-fixtures", help="generate a self-contained synthetic dataset")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--grid", default="16")
    p.add_argument("--categories", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--models", default=None, help="subset of oracle models")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth_fixtures)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
