"""Per-sample and dataset-level localization metrics.

Dataset AUCs integrate the success ratio over the fixed 100-point grid
tau = i/100, i = 1..100, which stays within 0.01 of the exact integral.
All values live in [0, 1]; scaling to percentages happens only in reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import Literal, Sequence

import numpy as np

from .errors import MetricError
from .manifest import AudioType
from .simmap import ConsensusMask, LocalizationMap

_AUC_GRID_POINTS = 100


def _check_same_shape(a: tuple[int, int], b: tuple[int, int]) -> None:
    if a != b:
        raise MetricError(f"dimension mismatch: {a[0]}x{a[1]} vs {b[0]}x{b[1]}")


@dataclass(frozen=True)
class SampleMetrics:
    """Metrics for one evaluation row; cIoU fields only exist with GT."""

    sample_id: str
    audio_type: AudioType
    max_sim: float
    pia: float
    ciou_universal: float | None = None
    ciou_adaptive: float | None = None


@dataclass(frozen=True)
class NegativeTypeMetrics:
    mean_pia: float
    auc_n: float


@dataclass(frozen=True)
class DatasetMetrics:
    ciou_at_half: float
    ciou_adap_at_half: float
    auc: float
    auc_adap: float
    silence: NegativeTypeMetrics
    noise: NegativeTypeMetrics
    offscreen: NegativeTypeMetrics
    f_loc: float
    f_auc: float

    def negative(self, audio_type: AudioType) -> NegativeTypeMetrics:
        if audio_type is AudioType.SILENCE:
            return self.silence
        if audio_type is AudioType.NOISE:
            return self.noise
        if audio_type is AudioType.OFFSCREEN:
            return self.offscreen
        raise MetricError(f"no negative metrics for audio type {audio_type.value!r}")


@dataclass(frozen=True)
class CrossMapIoU:
    """Overlap of localization maps across the four audio conditions."""

    pos_silence: float
    pos_noise: float
    pos_offscreen: float
    neg_neg: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.pos_silence, self.pos_noise, self.pos_offscreen, self.neg_neg)


def ciou_sample(pred: LocalizationMap, gt: ConsensusMask) -> float:
    """Intersection over union between prediction and consensus GT."""
    _check_same_shape(pred.shape, gt.shape)
    if gt.area == 0:
        raise MetricError("consensus ground truth is empty")
    intersection = int(np.logical_and(pred.mask, gt.mask).sum())
    union = int(np.logical_or(pred.mask, gt.mask).sum())
    return intersection / union


def pia_sample(pred: LocalizationMap) -> float:
    """Fraction of image area activated."""
    return pred.active_pixels / pred.mask.size


def success_ratio(values: Sequence[float], tau: float, direction: Literal["ge", "le"]) -> float:
    """Fraction of values >= tau (direction 'ge') or <= tau ('le')."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise MetricError("success_ratio over an empty list")
    if direction == "ge":
        return float(np.count_nonzero(arr >= tau)) / arr.size
    if direction == "le":
        return float(np.count_nonzero(arr <= tau)) / arr.size
    raise MetricError(f"direction must be 'ge' or 'le', got {direction!r}")


def _grid_auc(values: Sequence[float], direction: Literal["ge", "le"]) -> float:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise MetricError("AUC over an empty list")
    total = 0.0
    for i in range(1, _AUC_GRID_POINTS + 1):
        total += success_ratio(arr, i / _AUC_GRID_POINTS, direction)
    return total / _AUC_GRID_POINTS


def auc_positive(cious: Sequence[float]) -> float:
    """Grid integral of the fraction of samples with cIoU >= tau."""
    return _grid_auc(cious, "ge")


def auc_negative(pias: Sequence[float]) -> float:
    """Grid integral of the fraction of negative samples with pIA <= tau."""
    return _grid_auc(pias, "le")


def dataset_ciou(cious: Sequence[float]) -> float:
    """Fraction of samples with per-sample cIoU >= 0.5."""
    return success_ratio(cious, 0.5, "ge")


def _harmonic(a: float, b: float) -> float:
    if a + b == 0.0:
        return 0.0
    return 2.0 * a * b / (a + b)


def f_loc(dataset_ciou_value: float, mean_pia_over_negatives: float) -> float:
    """Harmonic mean of dataset cIoU and (1 - mean negative pIA)."""
    return _harmonic(dataset_ciou_value, 1.0 - mean_pia_over_negatives)


def f_auc(auc_value: float, mean_auc_n: float) -> float:
    """Harmonic mean of positive AUC and mean negative AUC_N."""
    return _harmonic(auc_value, mean_auc_n)


def iou_between_maps(a: LocalizationMap, b: LocalizationMap) -> float:
    """IoU of two localization maps; two empty maps count as equal (1.0)."""
    _check_same_shape(a.shape, b.shape)
    union = int(np.logical_or(a.mask, b.mask).sum())
    if union == 0:
        return 1.0
    intersection = int(np.logical_and(a.mask, b.mask).sum())
    return intersection / union


def cross_map_suite(
    pos: LocalizationMap,
    sil: LocalizationMap,
    noi: LocalizationMap,
    off: LocalizationMap,
) -> CrossMapIoU:
    """Positive-vs-negative IoUs plus the mean pairwise negative IoU."""
    neg_pairs = (
        iou_between_maps(sil, noi),
        iou_between_maps(sil, off),
        iou_between_maps(noi, off),
    )
    return CrossMapIoU(
        pos_silence=iou_between_maps(pos, sil),
        pos_noise=iou_between_maps(pos, noi),
        pos_offscreen=iou_between_maps(pos, off),
        neg_neg=sum(neg_pairs) / 3.0,
    )


def dataset_metrics_from_samples(records: Sequence[SampleMetrics]) -> DatasetMetrics:
    """Reduce per-row metrics (all four audio types) to dataset level."""
    cious = [r.ciou_universal for r in records if r.audio_type is AudioType.POSITIVE]
    cious_adap = [r.ciou_adaptive for r in records if r.audio_type is AudioType.POSITIVE]
    if not cious or any(v is None for v in cious) or any(v is None for v in cious_adap):
        raise MetricError("positive rows with ground-truth cIoU are required")
    per_type: dict[AudioType, NegativeTypeMetrics] = {}
    for audio_type in (AudioType.SILENCE, AudioType.NOISE, AudioType.OFFSCREEN):
        pias = [r.pia for r in records if r.audio_type is audio_type]
        if not pias:
            raise MetricError(f"no rows with audio type {audio_type.value!r}")
        per_type[audio_type] = NegativeTypeMetrics(mean_pia=fmean(pias), auc_n=auc_negative(pias))
    ciou_at_half = dataset_ciou(cious)
    auc = auc_positive(cious)
    mean_pia = fmean(m.mean_pia for m in per_type.values())
    mean_auc_n = fmean(m.auc_n for m in per_type.values())
    return DatasetMetrics(
        ciou_at_half=ciou_at_half,
        ciou_adap_at_half=dataset_ciou(cious_adap),
        auc=auc,
        auc_adap=auc_positive(cious_adap),
        silence=per_type[AudioType.SILENCE],
        noise=per_type[AudioType.NOISE],
        offscreen=per_type[AudioType.OFFSCREEN],
        f_loc=f_loc(ciou_at_half, mean_pia),
        f_auc=f_auc(auc, mean_auc_n),
    )
