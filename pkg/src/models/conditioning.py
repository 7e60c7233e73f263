"""Appearance transfer and the channel stack the frame generator is conditioned on."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from ..skeleton.raster import rasterize_skeleton
from ..skeleton.skeleton import LimbSet, Skeleton
from ..skeleton.transforms import warp_limb_patch
from ..utils.errors import GeometryError, ShapeMismatchError


def transfer_appearance(
    ref_image: np.ndarray,
    ref_sk: Skeleton,
    target_sk: Skeleton,
    height: int,
    width: int,
    limbs: Optional[LimbSet] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Warp each body part of the reference person onto the target skeleton.

    Parts are composited in limb-set order, so later parts overwrite earlier
    ones. Returns ``(image [H, W, 3], mask [H, W])``.
    """
    limbs = limbs or LimbSet.coco_body()
    out = np.zeros((height, width, 3), dtype=np.float32)
    mask = np.zeros((height, width), dtype=bool)
    target_visible = set(limbs.visible_limbs(target_sk))
    shared = [i for i in limbs.visible_limbs(ref_sk) if i in target_visible]
    if not shared:
        raise GeometryError("Reference and target skeletons share no visible limb")
    for i in shared:
        try:
            patch, part = warp_limb_patch(ref_image, ref_sk, target_sk, limbs[i], (height, width))
        except GeometryError as e:
            logger.debug(f"Skipping limb {limbs[i].name}: {e}")
            continue
        out[part] = patch[part]
        mask |= part
    return out, mask


@dataclass(frozen=True)
class PersonCorrespondence:
    """``mapping[r]`` is the target person index for reference person ``r``."""

    mapping: tuple[int, ...]
    cost: float


def assign_person_correspondence(
    references: Sequence[Skeleton], targets: Sequence[Skeleton]
) -> PersonCorrespondence:
    """Exhaustive assignment minimizing squared distance between mean joint positions.

    Ties go to the lexicographically first permutation.
    """
    if len(references) != len(targets):
        raise ValueError(
            f"Cannot match {len(references)} reference persons to {len(targets)} targets"
        )
    if not references:
        return PersonCorrespondence((), 0.0)
    ref_centers = np.stack([sk.mean_position() for sk in references])
    tgt_centers = np.stack([sk.mean_position() for sk in targets])
    cost = ((ref_centers[:, None, :] - tgt_centers[None, :, :]) ** 2).sum(axis=-1)
    best: Optional[tuple[int, ...]] = None
    best_cost = np.inf
    for perm in itertools.permutations(range(len(targets))):
        c = float(sum(cost[r, t] for r, t in enumerate(perm)))
        if c < best_cost:
            best, best_cost = perm, c
    assert best is not None
    return PersonCorrespondence(best, best_cost)


def transfer_people(
    ref_image: np.ndarray,
    ref_persons: Sequence[Skeleton],
    target_persons: Sequence[Skeleton],
    height: int,
    width: int,
    limbs: Optional[LimbSet] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Transfer every reference person onto its corresponding target person."""
    if len(ref_persons) == 1 and len(target_persons) == 1:
        return transfer_appearance(
            ref_image, ref_persons[0], target_persons[0], height, width, limbs
        )
    match = assign_person_correspondence(ref_persons, target_persons)
    out = np.zeros((height, width, 3), dtype=np.float32)
    mask = np.zeros((height, width), dtype=bool)
    for r, t in enumerate(match.mapping):
        image, part = transfer_appearance(
            ref_image, ref_persons[r], target_persons[t], height, width, limbs
        )
        out[part] = image[part]
        mask |= part
    return out, mask


def rasterize_people(
    persons: Sequence[Skeleton], height: int, width: int, limbs: Optional[LimbSet] = None
) -> np.ndarray:
    limbs = limbs or LimbSet.coco_body()
    raster = np.zeros((height, width, len(limbs)), dtype=np.float32)
    for sk in persons:
        raster = np.maximum(raster, rasterize_skeleton(sk, height, width, limbs))
    return raster


@dataclass
class ReferenceSet:
    """Reference images of one subject, each with the people visible in it."""

    images: list[np.ndarray]
    people: list[list[Skeleton]]

    def __post_init__(self) -> None:
        if not self.images:
            raise ValueError("ReferenceSet needs at least one image")
        if len(self.images) != len(self.people):
            raise ValueError(
                f"{len(self.images)} reference images but {len(self.people)} skeleton sets"
            )

    def __len__(self) -> int:
        return len(self.images)

    def transfer(
        self,
        target_people: Sequence[Skeleton],
        height: int,
        width: int,
        limbs: Optional[LimbSet] = None,
    ) -> list[tuple[np.ndarray, np.ndarray]]:
        return [
            transfer_people(img, people, target_people, height, width, limbs)
            for img, people in zip(self.images, self.people)
        ]


@dataclass
class ConditioningStack:
    """Background, skeleton raster, transferred references and their masks.

    Channel order of ``to_array``: background (3), skeleton (L), references
    (3k), masks (k).
    """

    background: np.ndarray
    skeleton: np.ndarray
    references: np.ndarray
    masks: np.ndarray

    @property
    def num_limbs(self) -> int:
        return int(self.skeleton.shape[-1])

    @property
    def k(self) -> int:
        return int(self.references.shape[0])

    @property
    def channels(self) -> int:
        return 3 + self.num_limbs + 4 * self.k

    def to_array(self) -> np.ndarray:
        refs = np.concatenate(list(self.references), axis=-1)
        masks = np.stack(list(self.masks), axis=-1).astype(np.float32)
        return np.concatenate(
            [self.background.astype(np.float32), self.skeleton.astype(np.float32), refs, masks],
            axis=-1,
        )

    @classmethod
    def from_array(cls, array: np.ndarray, num_limbs: int, k: int) -> "ConditioningStack":
        if array.shape[-1] != 3 + num_limbs + 4 * k:
            raise ShapeMismatchError(
                f"Stack has {array.shape[-1]} channels, expected {3 + num_limbs + 4 * k}"
            )
        bg = array[..., :3]
        sk = array[..., 3 : 3 + num_limbs]
        start = 3 + num_limbs
        refs = np.stack([array[..., start + 3 * i : start + 3 * i + 3] for i in range(k)])
        masks = np.stack([array[..., start + 3 * k + i] for i in range(k)]) > 0.5
        return cls(bg, sk, refs, masks)


def conditioning_channels(num_limbs: int, k: int) -> int:
    return 3 + num_limbs + 4 * k


def build_conditioning(
    references: Sequence[tuple[np.ndarray, np.ndarray]],
    background: np.ndarray,
    skeleton_raster: np.ndarray,
) -> ConditioningStack:
    """Stack transferred references ``(image, mask)`` with background and skeleton raster."""
    if not references:
        raise ShapeMismatchError("Conditioning needs at least one reference")
    size = background.shape[:2]
    if background.ndim != 3 or background.shape[2] != 3:
        raise ShapeMismatchError(f"Background must be [H, W, 3], got {background.shape}")
    if skeleton_raster.shape[:2] != size:
        raise ShapeMismatchError(
            f"Skeleton raster {skeleton_raster.shape[:2]} does not match background {size}"
        )
    for image, mask in references:
        if image.shape != (*size, 3) or mask.shape != size:
            raise ShapeMismatchError(
                f"Reference {image.shape} / mask {mask.shape} does not match background {size}"
            )
    return ConditioningStack(
        background=np.asarray(background, dtype=np.float32),
        skeleton=np.asarray(skeleton_raster, dtype=np.float32),
        references=np.stack([np.asarray(img, dtype=np.float32) for img, _ in references]),
        masks=np.stack([np.asarray(m, dtype=bool) for _, m in references]),
    )


def conditioning_for(
    references: ReferenceSet,
    background: np.ndarray,
    target_people: Sequence[Skeleton],
    limbs: Optional[LimbSet] = None,
) -> ConditioningStack:
    """Full conditioning stack for one target frame."""
    h, w = background.shape[:2]
    limbs = limbs or LimbSet.coco_body()
    transferred = references.transfer(target_people, h, w, limbs)
    return build_conditioning(transferred, background, rasterize_people(target_people, h, w, limbs))
