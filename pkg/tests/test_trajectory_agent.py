"""Tests for the trajectory agent."""
import numpy as np
import pytest

from src.agents.trajectory_agent import (
    TrajectoryAgent,
    examples_from_manifest,
    prepare_trajectories,
)
from src.skeleton.skeleton import Skeleton, SkeletonSequence
from src.utils.checkpoint import load_metadata, save_metadata
from src.utils.errors import CheckpointError


@pytest.fixture
def examples(toy_manifest):
    """Labeled toy sequences."""
    return examples_from_manifest(toy_manifest)[0]


@pytest.fixture
def trained(tiny_traj_config, examples, tmp_path):
    """Agent after three steps, with its checkpoint path."""
    agent = TrajectoryAgent(tiny_traj_config, 2, seed=3, label_names=["a", "b"])
    path = tmp_path / "traj.ckpt"
    agent.train(examples, checkpoint_path=path)
    return agent, path


class TestPrepareTrajectories:
    """Test building the training arrays."""

    def test_subsamples_to_eight_frames(self, examples):
        """Test four-frame clips are stretched to eight."""
        data, labels = prepare_trajectories(examples, 2)
        assert data.shape == (8, 8, 36)
        assert data.dtype == np.float32
        assert sorted(set(labels.tolist())) == [0, 1]

    def test_empty(self):
        """Test an empty dataset."""
        with pytest.raises(ValueError, match="empty"):
            prepare_trajectories([], 2)

    def test_label_with_one_example(self, standing):
        """Test every label needs two examples."""
        seq = SkeletonSequence([standing] * 8)
        with pytest.raises(ValueError, match=r"\[1\]"):
            prepare_trajectories([(0, seq), (0, seq), (1, seq)], 2)

    def test_label_out_of_range(self, standing):
        """Test labels beyond the label count."""
        seq = SkeletonSequence([standing] * 8)
        with pytest.raises(ValueError):
            prepare_trajectories([(2, seq)], 2)


class TestExamplesFromManifest:
    """Test reading labeled sequences from a manifest."""

    def test_one_example_per_clip(self, toy_manifest):
        """Test every clip contributes its label index and sequence."""
        examples, names = examples_from_manifest(toy_manifest)
        assert names == toy_manifest.labels
        assert len(examples) == len(toy_manifest.clips)
        assert all(len(seq) == 4 for _, seq in examples)


class TestTrajectoryAgent:
    """Test training, sampling and checkpoints."""

    def test_train_records_history(self, trained):
        """Test every step is logged with finite losses."""
        agent, path = trained
        assert agent.step == 3
        assert [r["step"] for r in agent.history] == [1.0, 2.0, 3.0]
        assert all(np.isfinite(r["d_loss"]) and np.isfinite(r["g_loss"]) for r in agent.history)
        assert path.exists()

    def test_train_changes_weights(self, tiny_traj_config, examples):
        """Test both networks are updated."""
        agent = TrajectoryAgent(tiny_traj_config, 2)
        g0 = {k: v.copy() for k, v in agent.generator.state_dict().items()}
        d0 = {k: v.copy() for k, v in agent.discriminator.state_dict().items()}
        agent.train(examples, steps=1)
        assert any(not np.array_equal(g0[k], v) for k, v in agent.generator.state_dict().items())
        assert any(
            not np.array_equal(d0[k], v) for k, v in agent.discriminator.state_dict().items()
        )

    def test_training_is_deterministic(self, tiny_traj_config, examples):
        """Test equal seeds give bit-identical weights."""
        a = TrajectoryAgent(tiny_traj_config, 2, seed=9)
        b = TrajectoryAgent(tiny_traj_config, 2, seed=9)
        a.train(examples, steps=2)
        b.train(examples, steps=2)
        for (name, pa), (_, pb) in zip(
            a.generator.named_parameters(), b.generator.named_parameters()
        ):
            assert np.array_equal(pa.data, pb.data), name

    def test_checkpoint_round_trip(self, trained):
        """Test a reloaded agent samples identically."""
        agent, path = trained
        loaded = TrajectoryAgent.load(path)
        assert loaded.step == 3
        assert loaded.label_names == ["a", "b"]
        assert len(loaded.history) == 3
        a = agent.sample_one(1, 42).flatten()
        b = loaded.sample_one(1, 42).flatten()
        assert np.array_equal(a, b)

    def test_load_rejects_other_kind(self, trained):
        """Test a checkpoint of another kind."""
        _, path = trained
        save_metadata(path, {"kind": "frames"})
        with pytest.raises(CheckpointError):
            TrajectoryAgent.load(path)

    def test_load_rejects_generator_mismatch(self, trained):
        """Test a sidecar whose generator differs from the training settings."""
        _, path = trained
        meta = load_metadata(path)
        meta["generator"]["growth"] += 1
        save_metadata(path, meta)
        with pytest.raises(CheckpointError, match="generator configuration"):
            TrajectoryAgent.load(path)

    def test_sample(self, trained):
        """Test samples are eight-frame sequences, reproducible per seed."""
        agent, _ = trained
        first = agent.sample(0, 3, seed=5)
        again = agent.sample(0, 3, seed=5)
        assert len(first) == 3 and all(len(seq) == 8 for seq in first)
        assert all(np.array_equal(a.flatten(), b.flatten()) for a, b in zip(first, again))
        assert not np.array_equal(first[0].flatten(), first[1].flatten())

    def test_sample_flat(self, trained):
        """Test batched sampling shape."""
        agent, _ = trained
        flat = agent.sample_flat(1, 5, seed=0)
        assert flat.shape == (5, 288)
        assert agent.generator.training

    def test_sample_label_range(self, trained):
        """Test sampling an unknown label."""
        agent, _ = trained
        with pytest.raises(ValueError):
            agent.sample_one(2, 0)

    def test_generated_skeletons_visible(self, trained):
        """Test generated joints are all visible in the unit square."""
        agent, _ = trained
        seq = agent.sample_one(0, 1)
        assert all(isinstance(sk, Skeleton) and sk.in_unit_square() for sk in seq)
