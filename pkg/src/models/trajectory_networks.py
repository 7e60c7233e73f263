"""Label-conditioned skeleton trajectory generator and three-head discriminator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..schemas.models import TrajDiscriminatorConfig, TrajGeneratorConfig
from ..skeleton.skeleton import FLAT_DIM, SkeletonSequence
from ..tensor import ops
from ..tensor.layers import Conv1d, ConvTranspose1d, Dense, DenseBlock1d, Module, ModuleList
from ..tensor.tensor import Tensor, concat
from ..utils.errors import ShapeMismatchError

TIMESTEPS = 8
LOG_EPS = 1e-7
# 8 -> 4 -> 2 -> 1
_LEVELS = 3


def one_hot(labels: np.ndarray, num_labels: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int).reshape(-1)
    if np.any(labels < 0) or np.any(labels >= num_labels):
        raise ValueError(f"Label out of range [0, {num_labels}): {labels.tolist()}")
    out = np.zeros((len(labels), num_labels), dtype=np.float32)
    out[np.arange(len(labels)), labels] = 1.0
    return out


def label_channels(labels: np.ndarray, num_labels: int, timesteps: int = TIMESTEPS) -> np.ndarray:
    """One-hot labels replicated along time: ``[B, T, A]``."""
    codes = one_hot(labels, num_labels)
    return np.repeat(codes[:, None, :], timesteps, axis=1)


def sample_noise(
    rng: np.random.Generator, batch: int = 1, channels: int = 128
) -> np.ndarray:
    """Uniform ``[-1, 1]`` noise shaped ``[B, 8, 1, channels]``."""
    return rng.uniform(-1.0, 1.0, size=(batch, TIMESTEPS, 1, channels)).astype(np.float32)


class TrajectoryGenerator(Module):
    """U-shaped 1-D network over time with dense blocks and skip connections.

    Input ``[B, 8, 1, noise + A]``, output ``[B, 8, 1, 36]`` in ``(0, 1)``.
    """

    def __init__(self, config: TrajGeneratorConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        c_in = config.noise_channels + config.num_labels
        g, n = config.growth, config.block_layers
        self.stem = Conv1d(c_in, config.stem_channels, 3, rng, padding=1)

        self.down_blocks = ModuleList()
        self.downsamplers = ModuleList()
        skip_channels = []
        channels = config.stem_channels
        for _ in range(_LEVELS):
            block = DenseBlock1d(channels, g, n, rng, config.alpha)
            self.down_blocks.append(block)
            channels = block.out_channels
            skip_channels.append(channels)
            self.downsamplers.append(Conv1d(channels, channels, 2, rng, stride=2))

        self.bottleneck = DenseBlock1d(channels, g, n, rng, config.alpha)
        channels = self.bottleneck.out_channels

        self.upsamplers = ModuleList()
        self.up_blocks = ModuleList()
        for skip in reversed(skip_channels):
            self.upsamplers.append(ConvTranspose1d(channels, skip, 2, rng, stride=2))
            block = DenseBlock1d(2 * skip, g, n, rng, config.alpha)
            self.up_blocks.append(block)
            channels = block.out_channels

        self.head = Conv1d(channels, config.out_channels, 1, rng)

    def forward(self, x: Tensor) -> Tensor:
        cfg = self.config
        expected = (TIMESTEPS, 1, cfg.noise_channels + cfg.num_labels)
        if x.ndim != 4 or tuple(x.shape[1:]) != expected:
            raise ShapeMismatchError(f"Generator input must be [B, {expected}], got {x.shape}")
        b = x.shape[0]
        h = ops.leaky_relu(self.stem(x.reshape(b, TIMESTEPS, expected[2])), cfg.alpha)

        skips = []
        for block, down in zip(self.down_blocks, self.downsamplers):
            h = block(h)
            skips.append(h)
            h = ops.leaky_relu(down(h), cfg.alpha)
        h = self.bottleneck(h)
        for up, block, skip in zip(self.upsamplers, self.up_blocks, reversed(skips)):
            h = ops.relu(up(h))
            h = block(ops.skip_concat(h, skip))

        y = ops.sigmoid(self.head(h))
        return y.reshape(b, TIMESTEPS, 1, cfg.out_channels)

    def build_input(self, z: np.ndarray, labels: np.ndarray) -> Tensor:
        """Concatenate noise ``[B, 8, 1, noise]`` with replicated one-hot labels."""
        z = np.asarray(z, dtype=np.float32)
        if z.ndim == 3:
            z = z[None]
        codes = label_channels(labels, self.config.num_labels)[:, :, None, :]
        if z.shape[0] != codes.shape[0]:
            raise ShapeMismatchError(f"{z.shape[0]} noise tensors for {codes.shape[0]} labels")
        return Tensor(np.concatenate([z, codes], axis=-1))

    def generate(self, z: np.ndarray, labels: np.ndarray) -> Tensor:
        return self(self.build_input(z, labels))


def generate_trajectory(
    generator: TrajectoryGenerator, label: int, z: np.ndarray
) -> SkeletonSequence:
    """Run the generator for one label and unflatten to 8 visible skeletons."""
    if not 0 <= label < generator.config.num_labels:
        raise ValueError(f"Label {label} out of range [0, {generator.config.num_labels})")
    was_training = generator.training
    generator.eval()
    try:
        out = generator.generate(z, np.array([label]))
    finally:
        generator.train(was_training)
    return SkeletonSequence.from_flat(out.data.reshape(TIMESTEPS, FLAT_DIM))


@dataclass
class TrajectoryScores:
    """Per-item sigmoid scores of each head, shaped ``[B]``."""

    frame: Tensor
    trajectory: Tensor
    batch: Tensor

    @property
    def heads(self) -> tuple[Tensor, Tensor, Tensor]:
        return self.frame, self.trajectory, self.batch

    @property
    def total(self) -> Tensor:
        return self.frame + self.trajectory + self.batch


class TrajectoryDiscriminator(Module):
    """Shared temporal trunk feeding a per-frame head, a trajectory head and a batch head."""

    def __init__(self, config: TrajDiscriminatorConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        c = config.trunk_channels
        self.trunk1 = Conv1d(FLAT_DIM + config.num_labels, c, 3, rng, padding=1)
        self.trunk2 = Conv1d(c, c, 3, rng, padding=1)

        self.frame_head = Conv1d(c, 1, 1, rng)

        mid = max(1, config.traj_channels // 2)
        self.traj_convs = ModuleList(
            [
                Conv1d(c, mid, 2, rng, stride=2),
                Conv1d(mid, mid, 2, rng, stride=2),
                Conv1d(mid, config.traj_channels, 2, rng, stride=2),
            ]
        )
        self.traj_out = Dense(config.traj_channels, 1, rng)

        self.batch_hidden = Dense(3 * TIMESTEPS * c, config.batch_hidden, rng)
        self.batch_out = Dense(config.batch_hidden, 1, rng)

    def forward(self, sequences: Tensor, labels: np.ndarray) -> TrajectoryScores:
        b = sequences.shape[0]
        if b < 1:
            raise ShapeMismatchError("Discriminator needs a non-empty batch")
        if sequences.size != b * TIMESTEPS * FLAT_DIM:
            raise ShapeMismatchError(
                f"Discriminator input must hold [B, {TIMESTEPS}, {FLAT_DIM}], got {sequences.shape}"
            )
        alpha = self.config.alpha
        x = sequences.reshape(b, TIMESTEPS, FLAT_DIM)
        codes = Tensor(label_channels(labels, self.config.num_labels), dtype=x.dtype)
        if codes.shape[0] != b:
            raise ShapeMismatchError(f"{b} sequences for {codes.shape[0]} labels")
        h = ops.leaky_relu(self.trunk1(concat([x, codes], axis=-1)), alpha)
        h = ops.leaky_relu(self.trunk2(h), alpha)

        frame = ops.sigmoid(self.frame_head(h)).reshape(b, TIMESTEPS).mean(axis=1)

        t = h
        for conv in self.traj_convs:
            t = ops.leaky_relu(conv(t), alpha)
        trajectory = ops.sigmoid(self.traj_out(t.reshape(b, self.config.traj_channels)))
        trajectory = trajectory.reshape(b)

        stats = ops.batch_stats(h.reshape(b, TIMESTEPS * self.config.trunk_channels))
        s = ops.leaky_relu(self.batch_hidden(stats.reshape(1, -1)), alpha)
        batch_score = ops.sigmoid(self.batch_out(s)).reshape(1)
        batch = batch_score * Tensor(np.ones(b), dtype=batch_score.dtype)
        return TrajectoryScores(frame, trajectory, batch)


def discriminate_traj(
    discriminator: TrajectoryDiscriminator, sequences: Tensor, labels: np.ndarray
) -> TrajectoryScores:
    return discriminator(sequences, labels)


def traj_gan_loss(d_real: Tensor, d_fake: Tensor) -> tuple[Tensor, Tensor]:
    """Non-saturating generator loss and discriminator loss for one head's scores."""
    real = d_real.clamp(LOG_EPS, 1 - LOG_EPS)
    fake = d_fake.clamp(LOG_EPS, 1 - LOG_EPS)
    disc = -real.log().mean() - (1.0 - fake).log().mean()
    gen = -fake.log().mean()
    return gen, disc


def generator_loss(fake: TrajectoryScores) -> Tensor:
    """Summed non-saturating loss over the three heads."""
    total: Tensor | None = None
    for head in fake.heads:
        loss = -head.clamp(LOG_EPS, 1 - LOG_EPS).log().mean()
        total = loss if total is None else total + loss
    assert total is not None
    return total


def discriminator_loss(real: TrajectoryScores, fake: TrajectoryScores) -> Tensor:
    """Summed discriminator loss over the three heads."""
    total: Tensor | None = None
    for r, f in zip(real.heads, fake.heads):
        _, loss = traj_gan_loss(r, f)
        total = loss if total is None else total + loss
    assert total is not None
    return total
