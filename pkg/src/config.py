"""Configuration management with Pydantic validation."""
import os
from pathlib import Path
from typing import Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

from .schemas.models import (
    FrameDiscriminatorConfig,
    FrameGeneratorConfig,
    LossWeights,
    TrajDiscriminatorConfig,
    TrajGeneratorConfig,
)

# Load .env file
load_dotenv(Path("config/.env"))

CONFIG_ENV_VAR = "ACTION_SYNTH_CONFIG"
DEFAULT_CONFIG_PATH = Path("config/config.yaml")


class LoggingConfig(BaseModel):
    """Logging configuration."""
    level: str = "INFO"
    file: str = "./logs/action_synth.log"
    max_size_mb: int = 10
    backup_count: int = 5
    console: bool = True


class PathsConfig(BaseModel):
    """Default locations for outputs."""
    output_dir: str = "./output"
    checkpoints_dir: str = "./checkpoints"

    @field_validator('output_dir', 'checkpoints_dir', mode='before')
    @classmethod
    def expand_paths(cls, v):
        """Expand ~ and environment variables in paths."""
        if isinstance(v, str):
            return os.path.expanduser(os.path.expandvars(v))
        return v


class AdamConfig(BaseModel):
    """Adam hyperparameters."""
    lr: float = Field(default=2e-4, gt=0.0)
    beta1: float = Field(default=0.5, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)


class TrajectoryConfig(BaseModel):
    """Trajectory GAN architecture and training."""
    batch_size: int = Field(default=16, ge=1)
    steps: int = Field(default=5000, ge=1)
    log_every: int = Field(default=100, ge=1)
    checkpoint_every: int = Field(default=1000, ge=1)
    noise_channels: int = Field(default=128, ge=1)
    stem_channels: int = Field(default=64, ge=1)
    growth: int = Field(default=16, ge=1)
    block_layers: int = Field(default=2, ge=1)
    trunk_channels: int = Field(default=64, ge=1)
    traj_channels: int = Field(default=256, ge=1)
    batch_hidden: int = Field(default=64, ge=1)
    alpha: float = Field(default=0.2, ge=0.0)
    optimizer: AdamConfig = Field(default_factory=AdamConfig)

    def generator_config(self, num_labels: int) -> TrajGeneratorConfig:
        return TrajGeneratorConfig(
            num_labels=num_labels,
            noise_channels=self.noise_channels,
            stem_channels=self.stem_channels,
            growth=self.growth,
            block_layers=self.block_layers,
            alpha=self.alpha,
        )

    def discriminator_config(self, num_labels: int) -> TrajDiscriminatorConfig:
        return TrajDiscriminatorConfig(
            num_labels=num_labels,
            trunk_channels=self.trunk_channels,
            traj_channels=self.traj_channels,
            batch_hidden=self.batch_hidden,
            alpha=self.alpha,
        )


class FramesConfig(BaseModel):
    """Frame compositor GAN architecture and training."""
    size: int = Field(default=64, ge=8)
    k: int = Field(default=4, ge=1)
    lambda_l1: float = Field(default=10.0, ge=0.0)
    beta_regional: float = Field(default=100.0, ge=0.0)
    limb_set: str = "coco_body"
    mask_radius: int = Field(default=2, ge=0)
    levels: int = Field(default=4, ge=1)
    base_channels: int = Field(default=64, ge=1)
    max_channels: int = Field(default=512, ge=1)
    dropout: float = Field(default=0.5, ge=0.0, lt=1.0)
    disc_base_channels: int = Field(default=64, ge=1)
    disc_max_channels: int = Field(default=256, ge=1)
    disc_layers: int = Field(default=3, ge=1)
    alpha: float = Field(default=0.2, ge=0.0)
    batch_size: int = Field(default=4, ge=1)
    steps: int = Field(default=2000, ge=1)
    log_every: int = Field(default=50, ge=1)
    checkpoint_every: int = Field(default=500, ge=1)
    holdout_fraction: float = Field(default=0.1, ge=0.0, lt=1.0)
    optimizer: AdamConfig = Field(default_factory=AdamConfig)

    @property
    def weights(self) -> LossWeights:
        return LossWeights(lambda_l1=self.lambda_l1, beta_regional=self.beta_regional)

    def generator_config(self, in_channels: int) -> FrameGeneratorConfig:
        return FrameGeneratorConfig(
            in_channels=in_channels,
            levels=self.levels,
            base_channels=self.base_channels,
            max_channels=self.max_channels,
            dropout=self.dropout,
            alpha=self.alpha,
        )

    def discriminator_config(self, in_channels: int) -> FrameDiscriminatorConfig:
        return FrameDiscriminatorConfig(
            in_channels=in_channels + 3,
            base_channels=self.disc_base_channels,
            max_channels=self.disc_max_channels,
            layers=self.disc_layers,
            alpha=self.alpha,
        )


class SynthesisConfig(BaseModel):
    """Dataset expansion recipes and job execution."""
    jitter: float = Field(default=0.15, ge=0.0, le=0.25)
    grayscale_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    workers: int = Field(default=1, ge=1)
    inject_count: int = Field(default=5, ge=0)


class EvaluationConfig(BaseModel):
    """Oracle evaluation settings."""
    samples_per_label: int = Field(default=200, ge=1)
    holdout_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)


class Config(BaseModel):
    """Main configuration."""
    seed: int = Field(default=0, ge=0)

    logging: LoggingConfig = Field(default_factory=LoggingConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)
    trajectory: TrajectoryConfig = Field(default_factory=TrajectoryConfig)
    frames: FramesConfig = Field(default_factory=FramesConfig)
    synthesis: SynthesisConfig = Field(default_factory=SynthesisConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)


def resolve_config_path(cli_path: Optional[Path] = None) -> Optional[Path]:
    """``--config`` if given, else ``$ACTION_SYNTH_CONFIG``, else the default file if present."""
    if cli_path is not None:
        return Path(cli_path)
    if os.environ.get(CONFIG_ENV_VAR):
        return Path(os.environ[CONFIG_ENV_VAR])
    return DEFAULT_CONFIG_PATH if DEFAULT_CONFIG_PATH.exists() else None


def load_config(config_path: Optional[Path]) -> Config:
    """Load and validate configuration from YAML file (defaults when ``None``)."""
    if config_path is None:
        return Config()
    config_path = Path(config_path)
    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    with open(config_path, 'r') as f:
        config_dict = yaml.safe_load(f) or {}

    try:
        return Config(**config_dict)
    except Exception as e:
        raise ValueError(f"Invalid configuration: {e}")
