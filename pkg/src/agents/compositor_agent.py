"""Compositor agent: trains the frame GAN and renders frames from conditioning stacks."""
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from loguru import logger

from ..config import FramesConfig
from ..models.conditioning import ReferenceSet, conditioning_channels, conditioning_for
from ..models.frame_networks import (
    PatchDiscriminator,
    UNetGenerator,
    frame_gan_losses,
    generate_frame,
    generator_gan_loss,
    l1_loss,
    regional_l1,
    total_loss,
)
from ..schemas.models import (
    ClipManifest,
    FrameDiscriminatorConfig,
    FrameGeneratorConfig,
    TrainingSummary,
)
from ..skeleton.raster import person_mask
from ..skeleton.skeleton import LimbSet, Skeleton, SkeletonSequence
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
from ..utils.image_io import list_frames, load_background, load_image
from ..utils.rng import derive_rng
from ..utils.skeleton_io import load_people
from .evaluation_agent import background_preservation

FrameRef = Tuple[int, int]
Sample = Tuple[np.ndarray, np.ndarray, np.ndarray]
HOLDOUT_FRAMES = 16


def _prefixed(metrics: Dict[str, float]) -> Dict[str, float]:
    return {f"holdout_{k}": v for k, v in metrics.items()}


def people_at(people: Sequence[SkeletonSequence], t: int) -> List[Skeleton]:
    return [seq[t] for seq in people]


def person_region(
    people: Sequence[Skeleton], size: int, radius: int, limbs: LimbSet
) -> np.ndarray:
    mask = np.zeros((size, size), dtype=bool)
    for sk in people:
        mask |= person_mask(sk, size, size, radius, limbs)
    return mask


class FrameDataset:
    """(conditioning, frame, person mask) triples drawn lazily from a manifest.

    Every frame of a clip with a ``frames_dir`` is a target. Its references are
    ``k`` other frames of the same subject picked at random from the training clips.
    """

    def __init__(
        self,
        manifest: ClipManifest,
        size: int,
        k: int,
        limbs: LimbSet,
        mask_radius: int,
    ):
        self.manifest = manifest
        self.size = size
        self.k = k
        self.limbs = limbs
        self.mask_radius = mask_radius
        self._images: Dict[Path, np.ndarray] = {}

        self.clips = []
        self.people: List[List[SkeletonSequence]] = []
        self.frames: List[List[Path]] = []
        for clip in manifest.clips:
            if clip.frames_dir is None:
                logger.warning(f"Clip {clip.clip_id} has no frames_dir; skipped for frame training")
                continue
            self.clips.append(clip)
            self.people.append(load_people(manifest.resolve(clip.skeleton_file)))
            self.frames.append(list_frames(manifest.resolve(clip.frames_dir)))
        if not self.clips:
            raise ValueError("No clip in the manifest has frames to train on")

        self.targets: List[FrameRef] = [
            (c, t) for c in range(len(self.clips)) for t in range(len(self.frames[c]))
        ]
        self.pools: Dict[str, List[FrameRef]] = {}
        for c, clip in enumerate(self.clips):
            self.pools.setdefault(clip.subject_id, []).extend(
                (c, t) for t in range(len(self.frames[c]))
            )
        for subject_id, pool in self.pools.items():
            if len(pool) < k + 1:
                raise ValueError(
                    f"Subject {subject_id} has {len(pool)} frames; need at least {k + 1} "
                    f"to draw {k} references per target"
                )

    def __len__(self) -> int:
        return len(self.targets)

    def image(self, c: int, t: int) -> np.ndarray:
        path = self.frames[c][t]
        if path not in self._images:
            self._images[path] = load_image(path, self.size)
        return self._images[path]

    def background(self, c: int, t: int) -> np.ndarray:
        clip = self.clips[c]
        if clip.background is not None:
            return load_background(self.manifest.resolve(clip.background), self.size, t)
        if not self.manifest.backgrounds:
            raise ValueError(f"Clip {clip.clip_id} has no background and the pool is empty")
        pool = self.manifest.backgrounds
        return load_background(self.manifest.resolve(pool[c % len(pool)]), self.size, t)

    def split(
        self, holdout_fraction: float, rng: np.random.Generator
    ) -> Tuple[List[FrameRef], List[FrameRef]]:
        """Partition targets by clip so held-out frames never share a clip with training ones.

        Reference pools shrink to the training clips, so held-out frames are never
        shown to the generator as references.
        """
        order = rng.permutation(len(self.clips))
        n_hold = int(round(holdout_fraction * len(self.clips)))
        n_hold = min(n_hold, len(self.clips) - 1)
        held = set(order[:n_hold].tolist())
        train = [ref for ref in self.targets if ref[0] not in held]
        holdout = [ref for ref in self.targets if ref[0] in held]
        self._restrict_pools(held)
        return train, holdout

    def _restrict_pools(self, held: Set[int]) -> None:
        for subject_id, pool in self.pools.items():
            kept = [ref for ref in pool if ref[0] not in held]
            if len(kept) < self.k + 1:
                logger.warning(
                    f"Subject {subject_id} keeps {len(kept)} training frames; "
                    f"references may include held-out frames"
                )
                continue
            self.pools[subject_id] = kept

    def sample(self, target: FrameRef, rng: np.random.Generator) -> Sample:
        c, t = target
        subject = self.clips[c].subject_id
        candidates = [ref for ref in self.pools[subject] if ref != target]
        picks = rng.choice(len(candidates), size=self.k, replace=False)
        refs = ReferenceSet(
            images=[self.image(*candidates[i]) for i in picks],
            people=[people_at(self.people[candidates[i][0]], candidates[i][1]) for i in picks],
        )
        target_people = people_at(self.people[c], t)
        stack = conditioning_for(refs, self.background(c, t), target_people, self.limbs)
        mask = person_region(target_people, self.size, self.mask_radius, self.limbs)
        return stack.to_array(), self.image(c, t), mask

    def batch(self, targets: Sequence[FrameRef], rng: np.random.Generator) -> Sample:
        samples = [self.sample(t, rng) for t in targets]
        return (
            np.stack([s[0] for s in samples]),
            np.stack([s[1] for s in samples]),
            np.stack([s[2] for s in samples]),
        )


class CompositorAgent:
    """Own the frame generator/discriminator pair, train it and render with it."""

    def __init__(self, config: FramesConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        self.limbs = LimbSet.named(config.limb_set)
        self.weights = config.weights
        in_channels = conditioning_channels(len(self.limbs), config.k)
        self.generator = UNetGenerator(
            config.generator_config(in_channels), derive_rng(seed, "frames.init.generator")
        )
        self.discriminator = PatchDiscriminator(
            config.discriminator_config(in_channels), derive_rng(seed, "frames.init.discriminator")
        )
        opt = config.optimizer
        self.opt_g = Adam(self.generator.parameters(), opt.lr, opt.beta1, opt.beta2, opt.eps)
        self.opt_d = Adam(self.discriminator.parameters(), opt.lr, opt.beta1, opt.beta2, opt.eps)
        self.step = 0
        self.history: List[Dict[str, float]] = []

    def dataset(self, manifest: ClipManifest) -> FrameDataset:
        return FrameDataset(
            manifest, self.config.size, self.config.k, self.limbs, self.config.mask_radius
        )

    def train_step(
        self, cond: np.ndarray, target: np.ndarray, mask: np.ndarray
    ) -> Dict[str, float]:
        c, y = Tensor(cond), Tensor(target)

        with no_grad():
            fake = self.generator(c)
        d_real = self.discriminator(c, y)
        d_fake = self.discriminator(c, fake.detach())
        _, d_loss = frame_gan_losses(d_real, d_fake)
        self.opt_d.zero_grad()
        d_loss.backward()
        self.opt_d.step()

        fake = self.generator(c)
        gan = generator_gan_loss(self.discriminator(c, fake))
        l1 = l1_loss(y, fake)
        regional = regional_l1(y, fake, mask)
        g_loss = total_loss(gan, l1, regional, self.weights)
        self.opt_g.zero_grad()
        g_loss.backward()
        self.opt_g.step()
        self.discriminator.zero_grad()

        self.step += 1
        record = {
            "step": float(self.step),
            "d_loss": d_loss.item(),
            "g_loss": g_loss.item(),
            "gan": gan.item(),
            "l1": l1.item(),
            "regional": regional.item(),
        }
        for key in ("d_loss", "g_loss"):
            if not np.isfinite(record[key]):
                raise NonFiniteError(f"{key} became non-finite at step {self.step}")
        return record

    def evaluate(self, samples: Sample) -> Dict[str, float]:
        """Held-out GAN, L1, regional L1 and background MAE with dropout disabled."""
        cond, target, mask = samples
        self.generator.eval()
        self.discriminator.eval()
        try:
            with no_grad():
                c, y = Tensor(cond), Tensor(target)
                fake = self.generator(c)
                gan = generator_gan_loss(self.discriminator(c, fake))
                l1 = l1_loss(y, fake)
                regional = regional_l1(y, fake, mask)
        finally:
            self.generator.train()
            self.discriminator.train()
        background = cond[..., :3]
        maes = [
            background_preservation(fake.data[i], background[i], mask[i])
            for i in range(len(cond))
            if not mask[i].all()
        ]
        return {
            "gan": gan.item(),
            "l1": l1.item(),
            "regional": regional.item(),
            "background_mae": float(np.mean(maes)) if maes else float("nan"),
        }

    def train(
        self,
        manifest: ClipManifest,
        steps: Optional[int] = None,
        checkpoint_path: Optional[Path] = None,
    ) -> TrainingSummary:
        data = self.dataset(manifest)
        steps = steps or self.config.steps
        train_refs, holdout_refs = data.split(
            self.config.holdout_fraction, derive_rng(self.seed, "frames.split")
        )
        holdout: Optional[Sample] = None
        if holdout_refs:
            pick_rng = derive_rng(self.seed, "frames.holdout")
            count = min(HOLDOUT_FRAMES, len(holdout_refs))
            chosen = pick_rng.choice(len(holdout_refs), size=count, replace=False)
            holdout = data.batch([holdout_refs[i] for i in chosen], pick_rng)
        else:
            logger.warning("No held-out clips; held-out metrics are not recorded")

        logger.info(
            f"Training frame GAN: {len(train_refs)} target frames, {len(holdout_refs)} held out, "
            f"{steps} steps, k={self.config.k}, lambda={self.weights.lambda_l1}, "
            f"beta={self.weights.beta_regional}"
        )
        self.generator.train()
        self.discriminator.train()
        if holdout is not None and self.step == 0:
            self.history.append({"step": 0.0, **_prefixed(self.evaluate(holdout))})

        b = self.config.batch_size
        for _ in range(steps):
            rng = derive_rng(self.seed, "frames.batch", self.step)
            idx = rng.choice(len(train_refs), size=b, replace=len(train_refs) < b)
            record = self.train_step(*data.batch([train_refs[i] for i in idx], rng))
            if self.step % self.config.log_every == 0 or self.step == steps:
                if holdout is not None:
                    record.update(_prefixed(self.evaluate(holdout)))
                self.history.append(record)
                logger.info(
                    f"[frames {self.step}/{steps}] D={record['d_loss']:.4f} "
                    f"G={record['g_loss']:.4f} L1={record['l1']:.4f} R={record['regional']:.4f}"
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

    def render(self, conditioning: np.ndarray) -> np.ndarray:
        return generate_frame(self.generator, conditioning)

    def save(self, path: Path) -> None:
        tensors = {f"generator.{k}": v for k, v in self.generator.state_dict().items()}
        tensors.update(
            {f"discriminator.{k}": v for k, v in self.discriminator.state_dict().items()}
        )
        save_checkpoint(path, tensors)
        save_metadata(
            path,
            {
                "kind": "frames",
                "generator": self.generator.config.model_dump(),
                "discriminator": self.discriminator.config.model_dump(),
                "training": self.config.model_dump(),
                "seed": self.seed,
                "step": self.step,
                "history": self.history,
            },
        )
        logger.info(f"Saved frame checkpoint (step {self.step}): {path}")

    @classmethod
    def load(cls, path: Path) -> "CompositorAgent":
        meta = load_metadata(path)
        if meta.get("kind") != "frames":
            raise CheckpointError(f"{path} is not a frame checkpoint")
        agent = cls(FramesConfig(**meta["training"]), meta["seed"])
        if agent.generator.config != FrameGeneratorConfig(**meta["generator"]):
            raise CheckpointError(f"{path}: generator configuration does not match training")
        if agent.discriminator.config != FrameDiscriminatorConfig(**meta["discriminator"]):
            raise CheckpointError(f"{path}: discriminator configuration does not match training")
        tensors = load_checkpoint(path)
        agent.generator.load_state_dict(strip_prefix(tensors, "generator."))
        agent.discriminator.load_state_dict(strip_prefix(tensors, "discriminator."))
        agent.step = int(meta.get("step", 0))
        agent.history = list(meta.get("history", []))
        return agent
