"""Evaluation engine for visual sound source localization models.

Scores similarity maps against consensus ground truth on positive audio and
against emptiness on negative audio (silence, noise, offscreen), calibrates
per-model universal thresholds, and aggregates seeded runs into reports.
"""

__version__ = "0.1.0"

from .calibration import (
    BoxplotStats,
    MaxSimDistribution,
    ThresholdEntry,
    boxplot_stats,
    quartile,
    threshold_for_model,
    universal_threshold,
)
from .errors import (
    AvlocError,
    CalibrationError,
    ManifestError,
    MapFormatError,
    MetricError,
    TaxonomyError,
    ValidationError,
)
from .extend import extend_manifest
from .harness import (
    EvaluationResult,
    ModelSpec,
    RunConfig,
    aggregate_seeds,
    calibrate_models,
    run_evaluation,
)
from .manifest import (
    AudioType,
    BroadCategory,
    ExtendedManifest,
    ExtendedSample,
    Sample,
    Taxonomy,
    load_manifest,
    load_taxonomy,
    manifest_stats,
    validate_taxonomy_coverage,
)
from .metrics import (
    CrossMapIoU,
    DatasetMetrics,
    SampleMetrics,
    auc_negative,
    auc_positive,
    ciou_sample,
    cross_map_suite,
    dataset_ciou,
    f_auc,
    f_loc,
    iou_between_maps,
    pia_sample,
    success_ratio,
)
from .rng import SeedStream
from .simmap import (
    ConsensusMask,
    LocalizationMap,
    MapMode,
    SimilarityMap,
    binarize_threshold,
    binarize_top_m,
    consensus_from_annotations,
    max_value,
    read_map,
    write_map,
)

__all__ = [name for name in dir() if not name.startswith("_")]
