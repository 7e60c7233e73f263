"""Pydantic data models for action-synth."""
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, Field, PrivateAttr, computed_field, field_validator, model_validator


# Network configurations


class TrajGeneratorConfig(BaseModel):
    """U-shaped trajectory generator with dense blocks."""
    num_labels: int = Field(ge=1)
    noise_channels: int = Field(default=128, ge=1)
    timesteps: Literal[8] = 8
    out_channels: Literal[36] = 36
    stem_channels: int = Field(default=64, ge=1)
    growth: int = Field(default=16, ge=1)
    block_layers: int = Field(default=2, ge=1)
    alpha: float = Field(default=0.2, ge=0.0)


class TrajDiscriminatorConfig(BaseModel):
    """Frame, trajectory and batch-statistics heads over a shared trunk."""
    num_labels: int = Field(ge=1)
    trunk_channels: int = Field(default=64, ge=1)
    traj_channels: int = Field(default=256, ge=1)
    batch_hidden: int = Field(default=64, ge=1)
    alpha: float = Field(default=0.2, ge=0.0)


class FrameGeneratorConfig(BaseModel):
    """U-Net over the conditioning stack."""
    in_channels: int = Field(ge=1)
    out_channels: int = 3
    levels: int = Field(default=4, ge=1)
    base_channels: int = Field(default=64, ge=1)
    max_channels: int = Field(default=512, ge=1)
    dropout: float = Field(default=0.5, ge=0.0, lt=1.0)
    alpha: float = Field(default=0.2, ge=0.0)


class FrameDiscriminatorConfig(BaseModel):
    """Patch discriminator scoring (conditioning, frame) pairs."""
    in_channels: int = Field(ge=1)
    base_channels: int = Field(default=64, ge=1)
    max_channels: int = Field(default=256, ge=1)
    layers: int = Field(default=3, ge=1)
    alpha: float = Field(default=0.2, ge=0.0)


class LossWeights(BaseModel):
    """L1 and regional L1 weights; ``beta > lambda > 0`` or both zero for the ablation."""
    lambda_l1: float = Field(default=10.0, ge=0.0)
    beta_regional: float = Field(default=100.0, ge=0.0)

    @model_validator(mode='after')
    def check_order(self) -> 'LossWeights':
        if self.lambda_l1 == 0.0 and self.beta_regional == 0.0:
            return self
        if not (self.beta_regional > self.lambda_l1 > 0.0):
            raise ValueError(
                f"Loss weights need beta > lambda > 0, got lambda={self.lambda_l1}, "
                f"beta={self.beta_regional}"
            )
        return self

    @property
    def is_ablation(self) -> bool:
        return self.lambda_l1 == 0.0 and self.beta_regional == 0.0


# Dataset manifest


class ReferenceFrame(BaseModel):
    """One appearance reference: an image plus the skeleton frame matching it."""
    image: str
    skeleton_file: str
    frame: int = Field(default=0, ge=0)
    person: int = Field(default=0, ge=0)


class ClipRecord(BaseModel):
    """One labeled clip of the seed dataset."""
    clip_id: str = Field(min_length=1)
    action_label: str = Field(min_length=1)
    subject_id: str = Field(min_length=1)
    skeleton_file: str
    frames_dir: Optional[str] = None
    background: Optional[str] = None


class SubjectRecord(BaseModel):
    """A person whose appearance can be transferred."""
    subject_id: str = Field(min_length=1)
    reference_frames: List[ReferenceFrame] = Field(default_factory=list)


class ClipManifest(BaseModel):
    """Clips, subjects and background pool of a dataset.

    Paths are stored as written and resolved against the manifest's directory.
    """
    clips: List[ClipRecord] = Field(default_factory=list)
    subjects: List[SubjectRecord] = Field(default_factory=list)
    backgrounds: List[str] = Field(default_factory=list)
    labels: List[str] = Field(default_factory=list)

    _base_dir: Path = PrivateAttr(default_factory=Path)

    @property
    def base_dir(self) -> Path:
        return self._base_dir

    def with_base_dir(self, base_dir: Path) -> 'ClipManifest':
        self._base_dir = Path(base_dir)
        return self

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self._base_dir / p

    def subject(self, subject_id: str) -> SubjectRecord:
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise KeyError(f"Unknown subject: {subject_id}")

    def clip(self, clip_id: str) -> ClipRecord:
        for c in self.clips:
            if c.clip_id == clip_id:
                return c
        raise KeyError(f"Unknown clip: {clip_id}")

    def label_names(self) -> List[str]:
        """Explicit label order if given, else sorted distinct clip labels."""
        if self.labels:
            return list(self.labels)
        return sorted({c.action_label for c in self.clips})


# Synthesis jobs


SkeletonOrigin = Literal['real', 'generated', 'transformed']


class SkeletonSource(BaseModel):
    """Where a job's skeleton sequence comes from."""
    origin: SkeletonOrigin
    skeleton_file: Optional[str] = None
    clip_id: Optional[str] = None
    label_index: Optional[int] = Field(default=None, ge=0)
    sample_seed: Optional[int] = Field(default=None, ge=0)
    homography: Optional[List[List[float]]] = None
    base: Optional['SkeletonSource'] = None

    @model_validator(mode='after')
    def check_origin(self) -> 'SkeletonSource':
        if self.origin == 'real' and self.skeleton_file is None:
            raise ValueError("real skeleton source needs skeleton_file")
        if self.origin == 'generated' and (self.label_index is None or self.sample_seed is None):
            raise ValueError("generated skeleton source needs label_index and sample_seed")
        if self.origin == 'transformed' and (self.homography is None or self.base is None):
            raise ValueError("transformed skeleton source needs homography and base")
        return self


SkeletonSource.model_rebuild()


class SynthesisJob(BaseModel):
    """One clip to render: skeleton source, appearance, background, label."""
    output_clip_id: str
    action_label: str
    subject_id: str
    background: str
    source: SkeletonSource

    @computed_field  # type: ignore[prop-decorator]
    @property
    def job_id(self) -> str:
        payload = self.model_dump(
            mode='json',
            include={'output_clip_id', 'action_label', 'subject_id', 'background', 'source'},
        )
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]


class ProvenanceRecord(BaseModel):
    """Everything needed to regenerate a synthesized clip."""
    job: SynthesisJob
    source_clip_id: Optional[str] = None
    subject_id: str
    skeleton_origin: SkeletonOrigin
    homography: Optional[List[List[float]]] = None
    frame_checkpoint_sha256: str
    trajectory_checkpoint_sha256: Optional[str] = None
    seeds: Dict[str, int] = Field(default_factory=dict)
    grayscale: bool = False
    frame_count: int = Field(ge=0)


# Reports


class GradCheckResult(BaseModel):
    """Outcome of one finite-difference gradient check."""
    name: str
    max_rel_error: float
    tolerance: float
    passed: bool


class TrainingSummary(BaseModel):
    """Loss history and checkpoint location of a training run."""
    steps: int
    seed: int
    checkpoint: Path
    history: List[Dict[str, float]] = Field(default_factory=list)

    @field_validator('checkpoint', mode='before')
    @classmethod
    def validate_path(cls, v: Any) -> Path:
        return Path(v) if not isinstance(v, Path) else v


class EvaluationReport(BaseModel):
    """Oracle scores for generated trajectories or frames."""
    tstr: Optional[float] = None
    real_baseline: Optional[float] = None
    centroid_accuracy: Optional[float] = None
    per_class: Dict[str, float] = Field(default_factory=dict)
    background_mae: Optional[float] = None
    regional_l1: Optional[float] = None
    bone_length_drift: Optional[float] = None
    diversity_ratio: Optional[float] = None


class ToyCorpusSpec(BaseModel):
    """Procedural seed dataset with distinct motion families per label."""
    num_labels: int = Field(default=2, ge=2)
    per_label: int = Field(default=100, ge=1)
    families: List[str] = Field(default_factory=list)
    noise: float = Field(default=0.005, ge=0.0)
    subjects: int = Field(default=4, ge=1)
    frames_per_clip: int = Field(default=8, ge=1)
    size: int = Field(default=64, ge=8)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode='after')
    def check_families(self) -> 'ToyCorpusSpec':
        if self.families:
            if len(self.families) != self.num_labels:
                raise ValueError(
                    f"{len(self.families)} families given for {self.num_labels} labels"
                )
            if len(set(self.families)) != len(self.families):
                raise ValueError("Motion families must be pairwise distinct")
        return self
