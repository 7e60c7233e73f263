"""COCO-18 skeleton geometry."""
from .raster import capsule_mask, dilate, erode, person_mask, rasterize_skeleton
from .skeleton import (
    FLAT_DIM,
    JOINT_NAMES,
    NUM_JOINTS,
    Limb,
    LimbSet,
    Skeleton,
    SkeletonSequence,
    denormalize,
    normalize,
    normalize_sequence,
)
from .transforms import (
    Homography,
    apply_homography,
    limb_transform,
    sample_homography,
    warp_limb_patch,
)

__all__ = [
    "FLAT_DIM",
    "JOINT_NAMES",
    "NUM_JOINTS",
    "Homography",
    "Limb",
    "LimbSet",
    "Skeleton",
    "SkeletonSequence",
    "apply_homography",
    "capsule_mask",
    "denormalize",
    "dilate",
    "erode",
    "limb_transform",
    "normalize",
    "normalize_sequence",
    "person_mask",
    "rasterize_skeleton",
    "sample_homography",
    "warp_limb_patch",
]
