"""Evaluation harness for ID-card presentation-attack-detection challenges."""

from .manifest import (
    Manifest,
    ManifestError,
    PaisKind,
    SampleClass,
    SampleRecord,
    filter_manifest,
    parse_manifest,
    serialize_manifest,
    validate_manifest,
)
from .metrics import (
    MetricsError,
    MetricsReport,
    Score,
    ScorePartition,
    apcer,
    av_rank,
    bpcer,
    bpcer_at_apcer,
    det_curve,
    eer,
    evaluate_all,
)
from .orchestrator import EndpointConfig, ScoreOutcome, ScoreSet, run_evaluation

__version__ = "0.1.0"

__all__ = [
    "EndpointConfig",
    "Manifest",
    "ManifestError",
    "MetricsError",
    "MetricsReport",
    "PaisKind",
    "SampleClass",
    "SampleRecord",
    "Score",
    "ScoreOutcome",
    "ScorePartition",
    "ScoreSet",
    "apcer",
    "av_rank",
    "bpcer",
    "bpcer_at_apcer",
    "det_curve",
    "eer",
    "evaluate_all",
    "filter_manifest",
    "parse_manifest",
    "run_evaluation",
    "serialize_manifest",
    "validate_manifest",
    "__version__",
]
