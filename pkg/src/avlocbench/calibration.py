"""Universal-threshold calibration from negative-audio max-similarity values.

A raw-cosine model's threshold is the largest third quartile among the
maximum-similarity distributions of the three negative audio types.
Normalized-unit models (saliency-style outputs in [0, 1]) use a fixed 0.75.
Quantiles interpolate linearly at q * (n - 1) over the sorted values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import CalibrationError, ValidationError
from .manifest import AudioType
from .simmap import MapMode

FIXED_NORMALIZED_THRESHOLD = 0.75


def quartile(values: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile at position q * (n - 1)."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise ValidationError("quantile of an empty list")
    if not 0.0 <= q <= 1.0:
        raise ValidationError(f"q must be in [0, 1], got {q}")
    position = q * (arr.size - 1)
    lower = math.floor(position)
    upper = min(lower + 1, arr.size - 1)
    fraction = position - lower
    return float(arr[lower] + fraction * (arr[upper] - arr[lower]))


def universal_threshold(
    silence_max: Sequence[float],
    noise_max: Sequence[float],
    offscreen_max: Sequence[float],
) -> float:
    """Largest Q3 across the three negative max-similarity distributions."""
    for name, values in (("silence", silence_max), ("noise", noise_max), ("offscreen", offscreen_max)):
        if len(values) == 0:
            raise CalibrationError(f"empty {name} distribution")
    return max(
        quartile(silence_max, 0.75),
        quartile(noise_max, 0.75),
        quartile(offscreen_max, 0.75),
    )


@dataclass(frozen=True)
class ThresholdEntry:
    mode: MapMode
    threshold: float
    q3_silence: float | None
    q3_noise: float | None
    q3_offscreen: float | None
    calibration_set: str

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "threshold": self.threshold,
            "q3_silence": self.q3_silence,
            "q3_noise": self.q3_noise,
            "q3_offscreen": self.q3_offscreen,
            "calibration_set": self.calibration_set,
        }


def threshold_for_model(
    mode: MapMode,
    negatives: Mapping[AudioType, Sequence[float]] | None,
    calibration_set: str = "",
) -> ThresholdEntry:
    """Calibrate one model: Q3-based for raw cosine, fixed for normalized."""
    q3 = {}
    if negatives is not None:
        for audio_type in (AudioType.SILENCE, AudioType.NOISE, AudioType.OFFSCREEN):
            values = negatives.get(audio_type, ())
            q3[audio_type] = quartile(values, 0.75) if len(values) else None
    if mode is MapMode.NORMALIZED_UNIT:
        threshold = FIXED_NORMALIZED_THRESHOLD
    else:
        if negatives is None or any(q3.get(t) is None for t in (AudioType.SILENCE, AudioType.NOISE, AudioType.OFFSCREEN)):
            raise CalibrationError("raw-cosine calibration requires all three negative distributions")
        threshold = max(q3[AudioType.SILENCE], q3[AudioType.NOISE], q3[AudioType.OFFSCREEN])
    return ThresholdEntry(
        mode=mode,
        threshold=threshold,
        q3_silence=q3.get(AudioType.SILENCE),
        q3_noise=q3.get(AudioType.NOISE),
        q3_offscreen=q3.get(AudioType.OFFSCREEN),
        calibration_set=calibration_set,
    )


def save_thresholds(table: Mapping[str, ThresholdEntry], path: str | Path) -> None:
    data = {model_id: entry.to_json_dict() for model_id, entry in sorted(table.items())}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_thresholds(path: str | Path) -> dict[str, ThresholdEntry]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise CalibrationError(f"{path}: invalid JSON: {e.msg}") from e
    if not isinstance(data, dict):
        raise CalibrationError(f"{path}: thresholds file must be a JSON object")
    table: dict[str, ThresholdEntry] = {}
    for model_id, entry in data.items():
        if not isinstance(entry, dict):
            raise CalibrationError(f"{path}: entry for {model_id!r} must be an object")
        try:
            mode = MapMode(entry["mode"])
            threshold = float(entry["threshold"])
        except (KeyError, ValueError) as e:
            raise CalibrationError(f"{path}: entry for {model_id!r}: {e}") from e
        table[model_id] = ThresholdEntry(
            mode=mode,
            threshold=threshold,
            q3_silence=entry.get("q3_silence"),
            q3_noise=entry.get("q3_noise"),
            q3_offscreen=entry.get("q3_offscreen"),
            calibration_set=entry.get("calibration_set", ""),
        )
    return table


# --- Distribution summaries (boxplot data) --------------------------------

@dataclass(frozen=True)
class BoxplotStats:
    """Five-number summary with 1.5 IQR whiskers and an outlier count."""

    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    whisker_low: float
    whisker_high: float
    outliers: int

    def to_json_dict(self) -> dict:
        return {
            "min": self.minimum,
            "q1": self.q1,
            "median": self.median,
            "q3": self.q3,
            "max": self.maximum,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "outliers": self.outliers,
        }


def boxplot_stats(values: Sequence[float]) -> BoxplotStats:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError("boxplot of an empty list")
    q1 = quartile(arr, 0.25)
    q3 = quartile(arr, 0.75)
    iqr = q3 - q1
    low_fence = q1 - 1.5 * iqr
    high_fence = q3 + 1.5 * iqr
    inside = arr[(arr >= low_fence) & (arr <= high_fence)]
    # The box itself always lies inside the fences, so `inside` is non-empty.
    return BoxplotStats(
        minimum=float(arr.min()),
        q1=q1,
        median=quartile(arr, 0.5),
        q3=q3,
        maximum=float(arr.max()),
        whisker_low=float(inside.min()),
        whisker_high=float(inside.max()),
        outliers=int(np.count_nonzero(arr < low_fence) + np.count_nonzero(arr > high_fence)),
    )


@dataclass(frozen=True)
class MaxSimDistribution:
    """Max-similarity values for one (model, audio type), with summary."""

    model_id: str
    audio_type: AudioType
    values: tuple[float, ...]
    stats: BoxplotStats

    @classmethod
    def from_values(cls, model_id: str, audio_type: AudioType, values: Sequence[float]) -> "MaxSimDistribution":
        return cls(
            model_id=model_id,
            audio_type=audio_type,
            values=tuple(float(v) for v in values),
            stats=boxplot_stats(values),
        )
