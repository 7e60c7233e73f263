"""Data models and schemas."""
from .models import (
    ClipManifest,
    ClipRecord,
    EvaluationReport,
    FrameDiscriminatorConfig,
    FrameGeneratorConfig,
    GradCheckResult,
    LossWeights,
    ProvenanceRecord,
    ReferenceFrame,
    SkeletonSource,
    SubjectRecord,
    SynthesisJob,
    ToyCorpusSpec,
    TrainingSummary,
    TrajDiscriminatorConfig,
    TrajGeneratorConfig,
)

__all__ = [
    "ClipManifest",
    "ClipRecord",
    "EvaluationReport",
    "FrameDiscriminatorConfig",
    "FrameGeneratorConfig",
    "GradCheckResult",
    "LossWeights",
    "ProvenanceRecord",
    "ReferenceFrame",
    "SkeletonSource",
    "SubjectRecord",
    "SynthesisJob",
    "ToyCorpusSpec",
    "TrainingSummary",
    "TrajDiscriminatorConfig",
    "TrajGeneratorConfig",
]
