"""Seeded multi-run evaluation, deterministic aggregation, output files.

A run evaluates every (model, seed, sample) cell: the four audio-condition
maps of each sample are binarized with the model's universal threshold,
scored per row, and reduced in manifest order so results never depend on
the worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean, stdev
from typing import Mapping, Sequence

from .calibration import BoxplotStats, MaxSimDistribution, ThresholdEntry, threshold_for_model
from .errors import MetricError, ValidationError
from .extend import extend_manifest
from .manifest import NEGATIVE_AUDIO_TYPES, AudioType, Sample, Taxonomy
from .metrics import (
    CrossMapIoU,
    DatasetMetrics,
    NegativeTypeMetrics,
    SampleMetrics,
    ciou_sample,
    cross_map_suite,
    dataset_metrics_from_samples,
    pia_sample,
)
from .oracles import MapSource
from .simmap import MapMode, binarize_threshold, binarize_top_m, consensus_from_annotations, max_value


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    mode: MapMode


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines an evaluation run."""

    models: tuple[ModelSpec, ...]
    seeds: tuple[int, ...]
    dataset_id: str = "dataset"
    calibration_set: str = ""
    min_agreement: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.models:
            raise ValidationError("at least one model is required")
        if not self.seeds:
            raise ValidationError("at least one seed is required")
        ids = [m.model_id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate model ids: {ids}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class SampleRecord:
    seed: int
    metrics: SampleMetrics
    source_sample_id: str | None = None


@dataclass(frozen=True)
class CrossRecord:
    seed: int
    sample_id: str
    iou: CrossMapIoU


@dataclass(frozen=True)
class ModelSeedResult:
    seed: int
    records: tuple[SampleRecord, ...]
    cross: tuple[CrossRecord, ...]
    dataset: DatasetMetrics


@dataclass(frozen=True)
class ModelEvaluation:
    model_id: str
    mode: MapMode
    threshold: float
    per_seed: tuple[ModelSeedResult, ...]
    mean: DatasetMetrics
    std: DatasetMetrics
    cross_mean: CrossMapIoU
    max_sim_stats: Mapping[str, BoxplotStats]


@dataclass(frozen=True)
class EvaluationResult:
    dataset_id: str
    seeds: tuple[int, ...]
    models: Mapping[str, ModelEvaluation]


# --- per-sample evaluation -------------------------------------------------

class _GroupEvaluator:
    """Evaluates the 4-row group of one sample for one model."""

    def __init__(self, map_source: MapSource, min_agreement: int):
        self.map_source = map_source
        self.min_agreement = min_agreement
        self._gt_cache: dict[tuple[str, int, int], object] = {}

    def _consensus(self, sample: Sample, height: int, width: int):
        key = (sample.sample_id, height, width)
        cached = self._gt_cache.get(key)
        if cached is None:
            cached = consensus_from_annotations(
                sample.gt_annotations, height, width, self.min_agreement
            )
            if cached.area == 0:
                raise MetricError(f"sample {sample.sample_id!r}: consensus ground truth is empty")
            self._gt_cache[key] = cached
        return cached

    def evaluate(self, model_id: str, threshold: float, sample: Sample) -> tuple[list[SampleMetrics], CrossMapIoU]:
        maps = {t: self.map_source.get(model_id, sample.sample_id, t) for t in AudioType}
        shape = maps[AudioType.POSITIVE].shape
        for audio_type, similarity in maps.items():
            if similarity.shape != shape:
                raise MetricError(
                    f"sample {sample.sample_id!r}: {audio_type.value} map is "
                    f"{similarity.shape[0]}x{similarity.shape[1]}, expected {shape[0]}x{shape[1]}"
                )
        loc = {t: binarize_threshold(maps[t], threshold) for t in AudioType}
        gt = self._consensus(sample, *shape)
        positive_map = maps[AudioType.POSITIVE]
        rows = [
            SampleMetrics(
                sample_id=sample.sample_id,
                audio_type=AudioType.POSITIVE,
                max_sim=max_value(positive_map),
                pia=pia_sample(loc[AudioType.POSITIVE]),
                ciou_universal=ciou_sample(loc[AudioType.POSITIVE], gt),
                ciou_adaptive=ciou_sample(binarize_top_m(positive_map, gt.area), gt),
            )
        ]
        for audio_type in NEGATIVE_AUDIO_TYPES:
            rows.append(
                SampleMetrics(
                    sample_id=sample.sample_id,
                    audio_type=audio_type,
                    max_sim=max_value(maps[audio_type]),
                    pia=pia_sample(loc[audio_type]),
                )
            )
        suite = cross_map_suite(
            loc[AudioType.POSITIVE],
            loc[AudioType.SILENCE],
            loc[AudioType.NOISE],
            loc[AudioType.OFFSCREEN],
        )
        return rows, suite


# --- aggregation -----------------------------------------------------------

def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    return fmean(values), (stdev(values) if len(values) > 1 else 0.0)


def _aggregate_metrics(per_seed: Sequence[DatasetMetrics]) -> tuple[DatasetMetrics, DatasetMetrics]:
    if not per_seed:
        raise MetricError("aggregate over zero seeds")

    def agg(get):
        return _mean_std([get(m) for m in per_seed])

    def agg_negative(kind: str) -> tuple[NegativeTypeMetrics, NegativeTypeMetrics]:
        pia_m, pia_s = agg(lambda m: getattr(m, kind).mean_pia)
        auc_m, auc_s = agg(lambda m: getattr(m, kind).auc_n)
        return NegativeTypeMetrics(pia_m, auc_m), NegativeTypeMetrics(pia_s, auc_s)

    fields = {}
    for name in ("ciou_at_half", "ciou_adap_at_half", "auc", "auc_adap", "f_loc", "f_auc"):
        fields[name] = agg(lambda m, n=name: getattr(m, n))
    negatives = {kind: agg_negative(kind) for kind in ("silence", "noise", "offscreen")}
    mean = DatasetMetrics(
        **{name: pair[0] for name, pair in fields.items()},
        **{kind: pair[0] for kind, pair in negatives.items()},
    )
    std = DatasetMetrics(
        **{name: pair[1] for name, pair in fields.items()},
        **{kind: pair[1] for kind, pair in negatives.items()},
    )
    return mean, std


def aggregate_seeds(
    per_seed: Sequence[Mapping[str, DatasetMetrics]],
) -> dict[str, tuple[DatasetMetrics, DatasetMetrics]]:
    """Mean and sample standard deviation per model across seeds.

    Raises MetricError when seeds disagree on the model keys.
    """
    if not per_seed:
        raise MetricError("aggregate over zero seeds")
    keys = list(per_seed[0])
    for i, seed_map in enumerate(per_seed):
        if set(seed_map) != set(keys):
            raise MetricError(
                f"seed index {i} has models {sorted(seed_map)}, expected {sorted(keys)}"
            )
    return {key: _aggregate_metrics([seed_map[key] for seed_map in per_seed]) for key in keys}


def _mean_cross(records: Sequence[CrossRecord]) -> CrossMapIoU:
    if not records:
        raise MetricError("no cross-IoU records to average")
    return CrossMapIoU(
        pos_silence=fmean(r.iou.pos_silence for r in records),
        pos_noise=fmean(r.iou.pos_noise for r in records),
        pos_offscreen=fmean(r.iou.pos_offscreen for r in records),
        neg_neg=fmean(r.iou.neg_neg for r in records),
    )


# --- calibration over a map source ----------------------------------------

def collect_max_sim(
    map_source: MapSource,
    model_id: str,
    samples: Sequence[Sample],
    audio_types: Sequence[AudioType] = tuple(AudioType),
) -> dict[AudioType, list[float]]:
    """Max similarity per sample for each requested audio type."""
    return {
        audio_type: [max_value(map_source.get(model_id, s.sample_id, audio_type)) for s in samples]
        for audio_type in audio_types
    }


def calibrate_models(
    map_source: MapSource,
    models: Sequence[ModelSpec],
    samples: Sequence[Sample],
    calibration_set: str,
) -> dict[str, ThresholdEntry]:
    """Compute the per-model universal thresholds on a calibration set."""
    table: dict[str, ThresholdEntry] = {}
    for spec in models:
        try:
            negatives = collect_max_sim(map_source, spec.model_id, samples, NEGATIVE_AUDIO_TYPES)
        except FileNotFoundError:
            if spec.mode is MapMode.RAW_COSINE:
                raise
            negatives = None  # fixed threshold needs no evidence
        table[spec.model_id] = threshold_for_model(spec.mode, negatives, calibration_set)
    return table


# --- the run ---------------------------------------------------------------

def run_evaluation(
    config: RunConfig,
    samples: Sequence[Sample],
    thresholds: Mapping[str, ThresholdEntry],
    map_source: MapSource,
    taxonomy: Taxonomy | None = None,
) -> EvaluationResult:
    """Evaluate every model over every seed of the extended test set.

    When a taxonomy is given, offscreen pairings are regenerated per seed
    and recorded on the offscreen rows; metric values themselves are a
    function of the maps, which are keyed by (sample, audio type).
    """
    if not samples:
        raise ValidationError("empty manifest")
    for spec in config.models:
        if spec.model_id not in thresholds:
            raise ValidationError(f"no threshold entry for model {spec.model_id!r}")
        if thresholds[spec.model_id].mode is not spec.mode:
            raise ValidationError(
                f"model {spec.model_id!r}: configured mode {spec.mode.value} does not match "
                f"thresholds file mode {thresholds[spec.model_id].mode.value}"
            )

    offscreen_by_seed: dict[int, dict[str, str]] = {}
    if taxonomy is not None:
        for seed in config.seeds:
            extended = extend_manifest(samples, taxonomy, seed, config.dataset_id)
            offscreen_by_seed[seed] = {
                row.base.sample_id: row.source_sample_id
                for row in extended.rows
                if row.audio_type is AudioType.OFFSCREEN
            }

    evaluator = _GroupEvaluator(map_source, config.min_agreement)
    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        models: dict[str, ModelEvaluation] = {}
        for spec in config.models:
            threshold = thresholds[spec.model_id].threshold
            per_seed_results: list[ModelSeedResult] = []
            for seed in config.seeds:
                work = (lambda s: evaluator.evaluate(spec.model_id, threshold, s))
                if executor is not None:
                    groups = list(executor.map(work, samples))
                else:
                    groups = [work(s) for s in samples]
                records: list[SampleRecord] = []
                cross: list[CrossRecord] = []
                sources = offscreen_by_seed.get(seed, {})
                for sample, (rows, suite) in zip(samples, groups):
                    for row in rows:
                        records.append(
                            SampleRecord(
                                seed=seed,
                                metrics=row,
                                source_sample_id=(
                                    sources.get(sample.sample_id)
                                    if row.audio_type is AudioType.OFFSCREEN
                                    else None
                                ),
                            )
                        )
                    cross.append(CrossRecord(seed=seed, sample_id=sample.sample_id, iou=suite))
                dataset = dataset_metrics_from_samples([r.metrics for r in records])
                per_seed_results.append(
                    ModelSeedResult(seed=seed, records=tuple(records), cross=tuple(cross), dataset=dataset)
                )
            mean, std = _aggregate_metrics([r.dataset for r in per_seed_results])
            all_cross = [c for r in per_seed_results for c in r.cross]
            first_seed = per_seed_results[0]
            stats = {
                audio_type.value: MaxSimDistribution.from_values(
                    spec.model_id,
                    audio_type,
                    [rec.metrics.max_sim for rec in first_seed.records if rec.metrics.audio_type is audio_type],
                ).stats
                for audio_type in AudioType
            }
            models[spec.model_id] = ModelEvaluation(
                model_id=spec.model_id,
                mode=spec.mode,
                threshold=threshold,
                per_seed=tuple(per_seed_results),
                mean=mean,
                std=std,
                cross_mean=_mean_cross(all_cross),
                max_sim_stats=stats,
            )
    finally:
        if executor is not None:
            executor.shutdown()
    return EvaluationResult(dataset_id=config.dataset_id, seeds=config.seeds, models=models)


# --- serialization ---------------------------------------------------------

def _metrics_to_dict(m: DatasetMetrics) -> dict:
    return {
        "ciou_at_half": m.ciou_at_half,
        "ciou_adap_at_half": m.ciou_adap_at_half,
        "auc": m.auc,
        "auc_adap": m.auc_adap,
        "silence": {"mean_pia": m.silence.mean_pia, "auc_n": m.silence.auc_n},
        "noise": {"mean_pia": m.noise.mean_pia, "auc_n": m.noise.auc_n},
        "offscreen": {"mean_pia": m.offscreen.mean_pia, "auc_n": m.offscreen.auc_n},
        "f_loc": m.f_loc,
        "f_auc": m.f_auc,
    }


def _cross_to_dict(c: CrossMapIoU) -> dict:
    return {
        "pos_silence": c.pos_silence,
        "pos_noise": c.pos_noise,
        "pos_offscreen": c.pos_offscreen,
        "neg_neg": c.neg_neg,
    }


def _record_to_dict(record: SampleRecord) -> dict:
    m = record.metrics
    return {
        "seed": record.seed,
        "sample_id": m.sample_id,
        "audio_type": m.audio_type.value,
        "max_sim": m.max_sim,
        "pia": m.pia,
        "ciou_universal": m.ciou_universal,
        "ciou_adaptive": m.ciou_adaptive,
        "source_sample_id": record.source_sample_id,
    }


def result_to_summary(result: EvaluationResult) -> dict:
    return {
        "dataset_id": result.dataset_id,
        "seeds": list(result.seeds),
        "models": {
            model_id: {
                "mode": ev.mode.value,
                "threshold": ev.threshold,
                "per_seed": [_metrics_to_dict(r.dataset) for r in ev.per_seed],
                "mean": _metrics_to_dict(ev.mean),
                "std": _metrics_to_dict(ev.std),
                "cross_iou_mean": _cross_to_dict(ev.cross_mean),
                "max_sim_stats": {
                    audio_type: stats.to_json_dict() for audio_type, stats in ev.max_sim_stats.items()
                },
            }
            for model_id, ev in result.models.items()
        },
    }


def write_outputs(result: EvaluationResult, out_dir: str | Path) -> Path:
    """Write summary.json plus per-(model, seed) record files; returns out_dir."""
    out = Path(out_dir)
    records_dir = out / "records"
    records_dir.mkdir(parents=True, exist_ok=True)
    for model_id, ev in result.models.items():
        for seed_result in ev.per_seed:
            metrics_path = records_dir / f"{model_id}.seed{seed_result.seed}.metrics.jsonl"
            with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
                for record in seed_result.records:
                    fh.write(json.dumps(_record_to_dict(record), ensure_ascii=False, separators=(",", ":")) + "\n")
            cross_path = records_dir / f"{model_id}.seed{seed_result.seed}.cross.jsonl"
            with open(cross_path, "w", encoding="utf-8", newline="\n") as fh:
                for cr in seed_result.cross:
                    row = {"seed": cr.seed, "sample_id": cr.sample_id, **_cross_to_dict(cr.iou)}
                    fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(result_to_summary(result), fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    return out
