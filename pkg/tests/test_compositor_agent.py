"""Tests for the compositor agent and its frame dataset."""
import numpy as np
import pytest

from src.agents.compositor_agent import CompositorAgent, FrameDataset
from src.agents.corpus_agent import CorpusAgent
from src.agents.trajectory_agent import TrajectoryAgent
from src.skeleton.skeleton import LimbSet
from src.utils.errors import CheckpointError
from src.utils.manifest_io import load_manifest


@pytest.fixture
def dataset(toy_manifest):
    """Frame dataset at 16x16 with two references per target."""
    return FrameDataset(toy_manifest, 16, 2, LimbSet.coco_body(), 1)


@pytest.fixture
def trained(tiny_frames_config, toy_manifest, tmp_path):
    """Agent after two steps, with its checkpoint path."""
    agent = CompositorAgent(tiny_frames_config, seed=4)
    path = tmp_path / "frames.ckpt"
    agent.train(toy_manifest, checkpoint_path=path)
    return agent, path


class TestFrameDataset:
    """Test drawing conditioning triples."""

    def test_every_frame_is_a_target(self, dataset, toy_spec):
        """Test one target per rendered frame."""
        assert len(dataset) == toy_spec.num_labels * toy_spec.per_label * toy_spec.frames_per_clip

    def test_sample_shapes(self, dataset, rng):
        """Test the stack holds 3 + 13 + 4k channels beside the frame and mask."""
        cond, frame, mask = dataset.sample((0, 1), rng)
        assert cond.shape == (16, 16, 3 + 13 + 8)
        assert frame.shape == (16, 16, 3)
        assert mask.shape == (16, 16) and mask.any() and not mask.all()

    def test_references_come_from_same_subject(self, dataset, rng):
        """Test each subject pool holds only that subject's frames."""
        for subject, pool in dataset.pools.items():
            assert all(dataset.clips[c].subject_id == subject for c, _ in pool)

    def test_split_by_clip(self, dataset):
        """Test held-out targets share no clip with training targets."""
        train, holdout = dataset.split(0.25, np.random.default_rng(0))
        assert len(train) + len(holdout) == len(dataset)
        assert {c for c, _ in train}.isdisjoint({c for c, _ in holdout})
        assert len({c for c, _ in holdout}) == 2

    def test_references_exclude_held_out_clips(self, dataset, rng):
        """Test reference pools keep only training clips after a split."""
        _, holdout = dataset.split(0.25, np.random.default_rng(0))
        held = {c for c, _ in holdout}
        for pool in dataset.pools.values():
            assert pool and held.isdisjoint(c for c, _ in pool)
        cond, frame, _ = dataset.sample(holdout[0], rng)
        assert cond.shape == (16, 16, 3 + 13 + 8) and frame.shape == (16, 16, 3)

    def test_batch(self, dataset, rng):
        """Test batches stack samples."""
        cond, frame, mask = dataset.batch([(0, 0), (3, 2)], rng)
        assert cond.shape[0] == frame.shape[0] == mask.shape[0] == 2

    def test_needs_frames(self, tmp_path, toy_spec):
        """Test a manifest without rendered frames."""
        CorpusAgent(toy_spec).write(tmp_path / "bare", render_frames=False)
        manifest = load_manifest(tmp_path / "bare" / "manifest.json")
        with pytest.raises(ValueError, match="No clip"):
            FrameDataset(manifest, 16, 2, LimbSet.coco_body(), 1)

    def test_reference_pool_too_small(self, toy_manifest):
        """Test k must leave a reference besides the target."""
        with pytest.raises(ValueError, match="need at least"):
            FrameDataset(toy_manifest, 16, 16, LimbSet.coco_body(), 1)


class TestCompositorAgent:
    """Test frame GAN training, rendering and checkpoints."""

    def test_history(self, trained):
        """Test held-out metrics before training and after each step."""
        agent, _ = trained
        assert agent.step == 2
        assert agent.history[0]["step"] == 0.0
        assert {"holdout_gan", "holdout_l1", "holdout_regional", "holdout_background_mae"} <= set(
            agent.history[0]
        )
        assert [r["step"] for r in agent.history] == [0.0, 1.0, 2.0]
        assert all(np.isfinite(r["g_loss"]) for r in agent.history[1:])

    def test_evaluate(self, tiny_frames_config, dataset, rng):
        """Test evaluation metrics without updating the networks."""
        agent = CompositorAgent(tiny_frames_config)
        before = {k: v.copy() for k, v in agent.generator.state_dict().items()}
        metrics = agent.evaluate(dataset.batch([(0, 0), (1, 1)], rng))
        assert set(metrics) == {"gan", "l1", "regional", "background_mae"}
        assert 0.0 <= metrics["background_mae"] <= 1.0
        assert all(np.array_equal(before[k], v) for k, v in agent.generator.state_dict().items())
        assert agent.generator.training

    def test_render(self, trained, dataset, rng):
        """Test rendering is deterministic."""
        agent, _ = trained
        cond, _, _ = dataset.sample((2, 0), rng)
        frame = agent.render(cond)
        assert frame.shape == (16, 16, 3)
        assert np.array_equal(frame, agent.render(cond))

    def test_training_is_deterministic(self, tiny_frames_config, toy_manifest):
        """Test equal seeds give identical weights."""
        a = CompositorAgent(tiny_frames_config, seed=1)
        b = CompositorAgent(tiny_frames_config, seed=1)
        a.train(toy_manifest, steps=1)
        b.train(toy_manifest, steps=1)
        for (name, pa), (_, pb) in zip(
            a.generator.named_parameters(), b.generator.named_parameters()
        ):
            assert np.array_equal(pa.data, pb.data), name

    def test_checkpoint_round_trip(self, trained, dataset, rng):
        """Test a reloaded agent renders identically."""
        agent, path = trained
        loaded = CompositorAgent.load(path)
        assert loaded.step == agent.step
        assert loaded.config == agent.config
        cond, _, _ = dataset.sample((5, 3), rng)
        assert np.array_equal(loaded.render(cond), agent.render(cond))

    def test_load_rejects_trajectory_checkpoint(self, tiny_traj_config, tmp_path):
        """Test a trajectory checkpoint is not a frame checkpoint."""
        path = tmp_path / "traj.ckpt"
        TrajectoryAgent(tiny_traj_config, 2).save(path)
        with pytest.raises(CheckpointError):
            CompositorAgent.load(path)

    def test_ablation_weights(self, tiny_frames_config, toy_manifest):
        """Test the pure GAN ablation trains."""
        config = tiny_frames_config.model_copy(update={"lambda_l1": 0.0, "beta_regional": 0.0})
        agent = CompositorAgent(config)
        assert agent.weights.is_ablation
        agent.train(toy_manifest, steps=1)
        assert agent.step == 1
