"""U-Net frame generator, patch discriminator and the frame reconstruction losses."""
from __future__ import annotations

import numpy as np

from ..schemas.models import FrameDiscriminatorConfig, FrameGeneratorConfig, LossWeights
from ..tensor import ops
from ..tensor.layers import Conv2d, ConvTranspose2d, Dropout, Module, ModuleList
from ..tensor.tensor import Tensor, concat
from ..utils.errors import ShapeMismatchError

LOG_EPS = 1e-7


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


class UNetGenerator(Module):
    """Encoder of stride-2 convolutions mirrored by transposed convolutions with skips.

    Decoder dropout stays active in training mode and is the generator's only
    source of randomness. Output is ``[B, H, W, 3]`` through a final sigmoid.
    """

    def __init__(self, config: FrameGeneratorConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        widths = [
            min(config.base_channels * 2**i, config.max_channels) for i in range(config.levels)
        ]
        self.widths = widths

        self.encoders = ModuleList()
        prev = config.in_channels
        for w in widths:
            self.encoders.append(Conv2d(prev, w, 4, rng, stride=2, padding=1))
            prev = w

        self.decoders = ModuleList()
        self.dropouts = ModuleList()
        dropout_rng = np.random.default_rng(int(rng.integers(2**63)))
        for i in range(config.levels - 1, 0, -1):
            in_ch = widths[i] if i == config.levels - 1 else 2 * widths[i]
            self.decoders.append(ConvTranspose2d(in_ch, widths[i - 1], 4, rng, stride=2, padding=1))
            self.dropouts.append(Dropout(config.dropout, dropout_rng))
        final_in = widths[0] if config.levels == 1 else 2 * widths[0]
        self.output = ConvTranspose2d(final_in, config.out_channels, 4, rng, stride=2, padding=1)

    def check_input(self, shape: tuple[int, ...]) -> None:
        if len(shape) != 4 or shape[3] != self.config.in_channels:
            raise ShapeMismatchError(
                f"Generator expects [B, H, W, {self.config.in_channels}], got {shape}"
            )
        min_size = 2 ** (self.config.levels + 1)
        for dim in shape[1:3]:
            if not _is_power_of_two(dim) or dim < min_size:
                raise ShapeMismatchError(
                    f"Frame size must be a power of two >= {min_size} for "
                    f"{self.config.levels} levels, got {shape[1]}x{shape[2]}"
                )

    def forward(self, x: Tensor) -> Tensor:
        self.check_input(x.shape)
        alpha = self.config.alpha
        skips = []
        h = x
        for enc in self.encoders:
            h = ops.leaky_relu(enc(h), alpha)
            skips.append(h)
        skips.pop()
        for dec, drop in zip(self.decoders, self.dropouts):
            h = drop(ops.relu(dec(h)))
            h = ops.skip_concat(h, skips.pop())
        return ops.sigmoid(self.output(h))


class PatchDiscriminator(Module):
    """Fully-convolutional scorer of ``(conditioning, frame)`` pairs.

    Three stride-2 convolutions and a 3x3 head give one sigmoid score per
    patch; at 64x64 the map is 8x8 with a 38-pixel receptive field.
    """

    def __init__(self, config: FrameDiscriminatorConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.convs = ModuleList()
        prev = config.in_channels
        for i in range(config.layers):
            width = min(config.base_channels * 2**i, config.max_channels)
            self.convs.append(Conv2d(prev, width, 4, rng, stride=2, padding=1))
            prev = width
        self.head = Conv2d(prev, 1, 3, rng, padding=1)

    def forward(self, conditioning: Tensor, frame: Tensor) -> Tensor:
        if conditioning.shape[:3] != frame.shape[:3]:
            raise ShapeMismatchError(
                f"Conditioning {conditioning.shape} and frame {frame.shape} are not aligned"
            )
        x = concat([conditioning, frame], axis=-1)
        if x.shape[3] != self.config.in_channels:
            raise ShapeMismatchError(
                f"Discriminator expects {self.config.in_channels} channels, got {x.shape[3]}"
            )
        for conv in self.convs:
            x = ops.leaky_relu(conv(x), self.config.alpha)
        return ops.sigmoid(self.head(x))


def generate_frame(generator: UNetGenerator, conditioning: np.ndarray) -> np.ndarray:
    """Inference-mode frame ``[H, W, 3]`` for one ``[H, W, C]`` stack."""
    was_training = generator.training
    generator.eval()
    try:
        out = generator(Tensor(np.asarray(conditioning, dtype=np.float32)[None]))
    finally:
        generator.train(was_training)
    return out.data[0]


def discriminate_frame(
    discriminator: PatchDiscriminator, conditioning: Tensor, frame: Tensor
) -> tuple[Tensor, Tensor]:
    """Patch score map and its mean."""
    patch_map = discriminator(conditioning, frame)
    return patch_map, patch_map.mean()


def l1_loss(target: Tensor, prediction: Tensor) -> Tensor:
    if target.shape != prediction.shape:
        raise ShapeMismatchError(f"l1_loss shapes differ: {target.shape} vs {prediction.shape}")
    return (prediction - target).abs().mean()


def regional_l1(target: Tensor, prediction: Tensor, mask: np.ndarray) -> Tensor:
    """Mean absolute difference over pixels where ``mask`` is set; 0 for an empty mask.

    ``mask`` is ``[H, W]`` or ``[B, H, W]`` and applies to every channel.
    """
    if target.shape != prediction.shape:
        raise ShapeMismatchError(f"regional_l1 shapes differ: {target.shape} vs {prediction.shape}")
    mask = np.asarray(mask, dtype=bool)
    spatial = target.shape[-3:-1] if target.ndim == 4 else target.shape[:2]
    if mask.shape[-2:] != tuple(spatial):
        raise ShapeMismatchError(f"Mask {mask.shape} does not match frames {target.shape}")
    weights = np.broadcast_to(mask[..., None], target.shape)
    count = int(weights.sum())
    if count == 0:
        return Tensor(np.zeros((), dtype=target.dtype))
    m = Tensor(weights.astype(target.dtype))
    return ((prediction - target).abs() * m).sum() * (1.0 / count)


def total_loss(gan: Tensor, l1: Tensor, regional: Tensor, weights: LossWeights) -> Tensor:
    """``gan + lambda * l1 + beta * regional``."""
    return gan + l1 * weights.lambda_l1 + regional * weights.beta_regional


def frame_gan_losses(d_real: Tensor, d_fake: Tensor) -> tuple[Tensor, Tensor]:
    """Non-saturating generator loss and discriminator loss over patch maps."""
    real = d_real.clamp(LOG_EPS, 1 - LOG_EPS)
    fake = d_fake.clamp(LOG_EPS, 1 - LOG_EPS)
    disc = -real.log().mean() - (1.0 - fake).log().mean()
    gen = -fake.log().mean()
    return gen, disc


def generator_gan_loss(d_fake: Tensor) -> Tensor:
    """Non-saturating ``-mean(log D(C, G(C)))``."""
    return -d_fake.clamp(LOG_EPS, 1 - LOG_EPS).log().mean()
