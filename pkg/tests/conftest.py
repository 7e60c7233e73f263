"""Shared fixtures: tiny network configurations and a small on-disk toy corpus."""
import numpy as np
import pytest

from src.agents.corpus_agent import BODY_CENTER, REST_POSE, CorpusAgent
from src.config import FramesConfig, TrajectoryConfig
from src.schemas.models import ToyCorpusSpec
from src.skeleton.skeleton import Skeleton
from src.utils.manifest_io import load_manifest


@pytest.fixture(autouse=True)
def no_config_env(monkeypatch):
    """Keep a developer's config override out of the tests."""
    monkeypatch.delenv("ACTION_SYNTH_CONFIG", raising=False)


@pytest.fixture
def standing():
    """A fully visible standing skeleton in normalized coordinates."""
    return Skeleton(BODY_CENTER + REST_POSE)


@pytest.fixture
def tiny_traj_config():
    """Trajectory GAN small enough to train in a test."""
    return TrajectoryConfig(
        batch_size=4,
        steps=3,
        log_every=1,
        checkpoint_every=2,
        noise_channels=4,
        stem_channels=4,
        growth=2,
        block_layers=1,
        trunk_channels=4,
        traj_channels=8,
        batch_hidden=4,
    )


@pytest.fixture
def tiny_frames_config():
    """Frame GAN at 16x16 with two U-Net levels."""
    return FramesConfig(
        size=16,
        k=2,
        mask_radius=1,
        levels=2,
        base_channels=4,
        max_channels=8,
        disc_base_channels=4,
        disc_max_channels=8,
        disc_layers=2,
        batch_size=2,
        steps=2,
        log_every=1,
        checkpoint_every=1,
        holdout_fraction=0.25,
    )


@pytest.fixture
def toy_spec():
    """Two labels, four clips each, two subjects, four 16x16 frames per clip."""
    return ToyCorpusSpec(num_labels=2, per_label=4, subjects=2, frames_per_clip=4, size=16, seed=0)


@pytest.fixture
def toy_corpus_dir(tmp_path, toy_spec):
    """Write the toy corpus and return its directory."""
    out = tmp_path / "corpus"
    CorpusAgent(toy_spec).write(out)
    return out


@pytest.fixture
def toy_manifest(toy_corpus_dir):
    """Validated manifest of the toy corpus."""
    return load_manifest(toy_corpus_dir / "manifest.json")


@pytest.fixture
def rng():
    """Fixed numpy generator."""
    return np.random.default_rng(1234)
