"""Trajectory agent: trains the label-conditioned trajectory GAN and samples from it."""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..config import TrajectoryConfig
from ..models.trajectory_networks import (
    TIMESTEPS,
    TrajectoryDiscriminator,
    TrajectoryGenerator,
    discriminator_loss,
    generate_trajectory,
    generator_loss,
    sample_noise,
)
from ..schemas.models import (
    ClipManifest,
    TrainingSummary,
    TrajDiscriminatorConfig,
    TrajGeneratorConfig,
)
from ..skeleton.skeleton import FLAT_DIM, SkeletonSequence
from ..tensor.optim import Adam
from ..tensor.tensor import Tensor, no_grad
from ..utils.checkpoint import (
    load_checkpoint,
    load_metadata,
    save_checkpoint,
    save_metadata,
    strip_prefix,
)
from ..utils.errors import CheckpointError, NonFiniteError
from ..utils.rng import derive_rng
from ..utils.skeleton_io import load_skeleton_sequence

LabeledSequence = Tuple[int, SkeletonSequence]


def prepare_trajectories(
    examples: Sequence[LabeledSequence], num_labels: int, min_per_label: int = 2
) -> Tuple[np.ndarray, np.ndarray]:
    """Stack examples as ``[N, 8, 36]`` float32 with labels ``[N]``.

    Clips of other lengths are uniformly subsampled to 8 frames.
    """
    if not examples:
        raise ValueError("Trajectory dataset is empty")
    counts = np.zeros(num_labels, dtype=int)
    data, labels = [], []
    for label, seq in examples:
        if not 0 <= label < num_labels:
            raise ValueError(f"Label {label} out of range [0, {num_labels})")
        if len(seq) != TIMESTEPS:
            seq = seq.subsample(TIMESTEPS)
        data.append(seq.flatten())
        labels.append(label)
        counts[label] += 1
    short = [i for i in range(num_labels) if counts[i] < min_per_label]
    if short:
        raise ValueError(
            f"Labels {short} have fewer than {min_per_label} examples (counts {counts.tolist()})"
        )
    return np.stack(data).astype(np.float32), np.asarray(labels, dtype=int)


class TrajectoryAgent:
    """Own a trajectory generator/discriminator pair and their optimizers."""

    def __init__(
        self,
        config: TrajectoryConfig,
        num_labels: int,
        seed: int = 0,
        label_names: Optional[List[str]] = None,
    ):
        self.config = config
        self.num_labels = num_labels
        self.seed = seed
        self.label_names = label_names or [str(i) for i in range(num_labels)]
        self.generator = TrajectoryGenerator(
            config.generator_config(num_labels), derive_rng(seed, "traj.init.generator")
        )
        self.discriminator = TrajectoryDiscriminator(
            config.discriminator_config(num_labels), derive_rng(seed, "traj.init.discriminator")
        )
        opt = config.optimizer
        self.opt_g = Adam(self.generator.parameters(), opt.lr, opt.beta1, opt.beta2, opt.eps)
        self.opt_d = Adam(self.discriminator.parameters(), opt.lr, opt.beta1, opt.beta2, opt.eps)
        self.step = 0
        self.history: List[Dict[str, float]] = []

    def _noise(self, name: str, batch: int) -> np.ndarray:
        rng = derive_rng(self.seed, name, self.step)
        return sample_noise(rng, batch, self.config.noise_channels)

    def train_step(self, data: np.ndarray, labels: np.ndarray) -> Dict[str, float]:
        """One discriminator update followed by one generator update."""
        n = len(data)
        b = self.config.batch_size
        batch_rng = derive_rng(self.seed, "traj.batch", self.step)
        idx = batch_rng.choice(n, size=b, replace=n < b)
        real = Tensor(data[idx])
        batch_labels = labels[idx]

        with no_grad():
            fake = self.generator.generate(self._noise("traj.noise.d", b), batch_labels)
        real_scores = self.discriminator(real, batch_labels)
        fake_scores = self.discriminator(fake.detach(), batch_labels)
        d_loss = discriminator_loss(real_scores, fake_scores)
        self.opt_d.zero_grad()
        d_loss.backward()
        self.opt_d.step()

        fake = self.generator.generate(self._noise("traj.noise.g", b), batch_labels)
        g_scores = self.discriminator(fake, batch_labels)
        g_loss = generator_loss(g_scores)
        self.opt_g.zero_grad()
        g_loss.backward()
        self.opt_g.step()
        self.discriminator.zero_grad()

        self.step += 1
        record = {
            "step": float(self.step),
            "d_loss": d_loss.item(),
            "g_loss": g_loss.item(),
            "d_frame": float(real_scores.frame.data.mean()),
            "d_traj": float(real_scores.trajectory.data.mean()),
            "d_batch": float(real_scores.batch.data.mean()),
        }
        for key in ("d_loss", "g_loss"):
            if not np.isfinite(record[key]):
                raise NonFiniteError(f"{key} became non-finite at step {self.step}")
        return record

    def train(
        self,
        examples: Sequence[LabeledSequence],
        steps: Optional[int] = None,
        checkpoint_path: Optional[Path] = None,
    ) -> TrainingSummary:
        """Alternate D/G updates for ``steps`` steps, logging and checkpointing periodically."""
        data, labels = prepare_trajectories(examples, self.num_labels)
        steps = steps or self.config.steps
        logger.info(
            f"Training trajectory GAN: {len(data)} sequences, {self.num_labels} labels, "
            f"{steps} steps, batch {self.config.batch_size}"
        )
        self.generator.train()
        self.discriminator.train()
        for _ in range(steps):
            record = self.train_step(data, labels)
            if self.step % self.config.log_every == 0 or self.step == 1:
                self.history.append(record)
                logger.info(
                    f"[traj {self.step}/{steps}] D={record['d_loss']:.4f} G={record['g_loss']:.4f}"
                )
            if checkpoint_path and self.step % self.config.checkpoint_every == 0:
                self.save(checkpoint_path)
        if checkpoint_path:
            self.save(checkpoint_path)
        return TrainingSummary(
            steps=self.step,
            seed=self.seed,
            checkpoint=checkpoint_path or Path(""),
            history=self.history,
        )

    def sample(self, label: int, count: int, seed: int) -> List[SkeletonSequence]:
        """``count`` trajectories for ``label``; sample ``i`` uses its own derived noise stream."""
        return [
            self.sample_one(label, int(derive_rng(seed, "sample", i).integers(2**63)))
            for i in range(count)
        ]

    def sample_one(self, label: int, sample_seed: int) -> SkeletonSequence:
        z = sample_noise(np.random.default_rng(sample_seed), 1, self.config.noise_channels)
        return generate_trajectory(self.generator, label, z)

    def sample_flat(self, label: int, count: int, seed: int) -> np.ndarray:
        """Batched sampling as ``[count, 8 * 36]`` arrays for the oracles."""
        rng = derive_rng(seed, "sample.batch", label)
        z = sample_noise(rng, count, self.config.noise_channels)
        self.generator.eval()
        with no_grad():
            out = self.generator.generate(z, np.full(count, label))
        self.generator.train()
        return out.data.reshape(count, TIMESTEPS * FLAT_DIM).astype(np.float64)

    def save(self, path: Path) -> None:
        tensors = {f"generator.{k}": v for k, v in self.generator.state_dict().items()}
        tensors.update(
            {f"discriminator.{k}": v for k, v in self.discriminator.state_dict().items()}
        )
        save_checkpoint(path, tensors)
        save_metadata(
            path,
            {
                "kind": "trajectory",
                "generator": self.generator.config.model_dump(),
                "discriminator": self.discriminator.config.model_dump(),
                "training": self.config.model_dump(),
                "seed": self.seed,
                "step": self.step,
                "labels": self.label_names,
                "history": self.history,
            },
        )
        logger.info(f"Saved trajectory checkpoint (step {self.step}): {path}")

    @classmethod
    def load(cls, path: Path) -> "TrajectoryAgent":
        meta = load_metadata(path)
        if meta.get("kind") != "trajectory":
            raise CheckpointError(f"{path} is not a trajectory checkpoint")
        gen_cfg = TrajGeneratorConfig(**meta["generator"])
        disc_cfg = TrajDiscriminatorConfig(**meta["discriminator"])
        config = TrajectoryConfig(**meta["training"])
        agent = cls(config, gen_cfg.num_labels, meta["seed"], meta.get("labels"))
        if agent.generator.config != gen_cfg:
            raise CheckpointError(f"{path}: generator configuration does not match training")
        if agent.discriminator.config != disc_cfg:
            raise CheckpointError(f"{path}: discriminator configuration does not match training")
        tensors = load_checkpoint(path)
        agent.generator.load_state_dict(strip_prefix(tensors, "generator."))
        agent.discriminator.load_state_dict(strip_prefix(tensors, "discriminator."))
        agent.step = int(meta.get("step", 0))
        agent.history = list(meta.get("history", []))
        return agent


def examples_from_manifest(manifest: ClipManifest) -> Tuple[List[LabeledSequence], List[str]]:
    """Labeled skeleton sequences of every clip, labels indexed by ``manifest.label_names()``."""
    names = manifest.label_names()
    index = {name: i for i, name in enumerate(names)}
    examples = [
        (index[clip.action_label], load_skeleton_sequence(manifest.resolve(clip.skeleton_file)))
        for clip in manifest.clips
    ]
    return examples, names
