"""COCO-18 skeleton records, normalization and body-part definitions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from ..utils.errors import GeometryError, ShapeMismatchError

JOINT_NAMES: tuple[str, ...] = (
    "nose",
    "neck",
    "r_shoulder",
    "r_elbow",
    "r_wrist",
    "l_shoulder",
    "l_elbow",
    "l_wrist",
    "r_hip",
    "r_knee",
    "r_ankle",
    "l_hip",
    "l_knee",
    "l_ankle",
    "r_eye",
    "l_eye",
    "r_ear",
    "l_ear",
)
NUM_JOINTS = len(JOINT_NAMES)
FLAT_DIM = 2 * NUM_JOINTS


@dataclass
class Skeleton:
    """18 ``(x, y)`` joints with visibility flags. Invisible joints are stored at ``(0, 0)``."""

    joints: np.ndarray
    visible: np.ndarray = field(default_factory=lambda: np.ones(NUM_JOINTS, dtype=bool))

    def __post_init__(self) -> None:
        self.joints = np.array(self.joints, dtype=np.float64)
        self.visible = np.array(self.visible, dtype=bool)
        if self.joints.shape != (NUM_JOINTS, 2):
            raise ShapeMismatchError(
                f"Skeleton needs {NUM_JOINTS}x2 joints, got {self.joints.shape}"
            )
        if self.visible.shape != (NUM_JOINTS,):
            raise ShapeMismatchError(
                f"Skeleton needs {NUM_JOINTS} visibility flags, got {self.visible.shape}"
            )
        self.joints[~self.visible] = 0.0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Skeleton):
            return NotImplemented
        return bool(
            np.array_equal(self.joints, other.joints)
            and np.array_equal(self.visible, other.visible)
        )

    def in_unit_square(self) -> bool:
        pts = self.joints[self.visible]
        return bool(np.all((pts >= 0.0) & (pts <= 1.0)))

    def flatten(self) -> np.ndarray:
        """``[x0, y0, x1, y1, ...]`` of length 36."""
        return self.joints.reshape(-1).copy()

    @classmethod
    def from_flat(cls, flat: np.ndarray, visible: Optional[np.ndarray] = None) -> "Skeleton":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (FLAT_DIM,):
            raise ShapeMismatchError(f"Flat skeleton needs {FLAT_DIM} values, got {flat.shape}")
        if visible is None:
            visible = np.ones(NUM_JOINTS, bool)
        return cls(flat.reshape(NUM_JOINTS, 2), visible)

    def mean_position(self) -> np.ndarray:
        pts = self.joints[self.visible]
        if len(pts) == 0:
            raise GeometryError("Skeleton has no visible joints")
        return pts.mean(axis=0)


@dataclass
class SkeletonSequence:
    frames: list[Skeleton]
    source_width: int = 1
    source_height: int = 1

    def __post_init__(self) -> None:
        if len(self.frames) < 1:
            raise ShapeMismatchError("SkeletonSequence needs at least one frame")

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Skeleton]:
        return iter(self.frames)

    def __getitem__(self, index: int) -> Skeleton:
        return self.frames[index]

    def flatten(self) -> np.ndarray:
        """``[T, 36]`` array of joint coordinates."""
        return np.stack([sk.flatten() for sk in self.frames])

    def visibility(self) -> np.ndarray:
        return np.stack([sk.visible for sk in self.frames])

    @classmethod
    def from_flat(
        cls,
        flat: np.ndarray,
        source_width: int = 1,
        source_height: int = 1,
        visibility: Optional[np.ndarray] = None,
    ) -> "SkeletonSequence":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.ndim != 2 or flat.shape[1] != FLAT_DIM:
            raise ShapeMismatchError(f"Flat sequence needs [T, {FLAT_DIM}], got {flat.shape}")
        frames = [
            Skeleton.from_flat(row, None if visibility is None else visibility[t])
            for t, row in enumerate(flat)
        ]
        return cls(frames, source_width, source_height)

    def reversed(self) -> "SkeletonSequence":
        return SkeletonSequence(self.frames[::-1], self.source_width, self.source_height)

    def subsample(self, length: int) -> "SkeletonSequence":
        """Uniform temporal subsampling to ``length`` frames (repeats frames of short clips)."""
        if length < 1:
            raise ValueError(f"length must be positive, got {length}")
        idx = np.round(np.linspace(0, len(self.frames) - 1, length)).astype(int)
        return SkeletonSequence(
            [self.frames[i] for i in idx], self.source_width, self.source_height
        )


def normalize(sk: Skeleton, width: float, height: float) -> Skeleton:
    """Pixel coordinates to ``[0, 1]`` by per-axis division."""
    if width <= 0 or height <= 0:
        raise GeometryError(f"Image dimensions must be positive, got {width}x{height}")
    return Skeleton(sk.joints / np.array([width, height], dtype=np.float64), sk.visible)


def denormalize(sk: Skeleton, width: float, height: float) -> Skeleton:
    if width <= 0 or height <= 0:
        raise GeometryError(f"Image dimensions must be positive, got {width}x{height}")
    return Skeleton(sk.joints * np.array([width, height], dtype=np.float64), sk.visible)


def normalize_sequence(seq: SkeletonSequence) -> SkeletonSequence:
    frames = [normalize(sk, seq.source_width, seq.source_height) for sk in seq]
    return SkeletonSequence(frames, seq.source_width, seq.source_height)


@dataclass(frozen=True)
class Limb:
    a: int
    b: int
    width_ratio: float
    name: str


# Draw order: torso, then limbs, then head
_TORSO: tuple[tuple[int, int, str], ...] = (
    (1, 2, "neck-r_shoulder"),
    (1, 5, "neck-l_shoulder"),
    (1, 8, "neck-r_hip"),
    (1, 11, "neck-l_hip"),
)
_LIMBS: tuple[tuple[int, int, str], ...] = (
    (2, 3, "r_upper_arm"),
    (3, 4, "r_forearm"),
    (5, 6, "l_upper_arm"),
    (6, 7, "l_forearm"),
    (8, 9, "r_thigh"),
    (9, 10, "r_shin"),
    (11, 12, "l_thigh"),
    (12, 13, "l_shin"),
)
_HEAD_RING: tuple[tuple[int, int, str], ...] = (
    (0, 14, "nose-r_eye"),
    (14, 16, "r_eye-r_ear"),
    (0, 15, "nose-l_eye"),
    (15, 17, "l_eye-l_ear"),
)


class LimbSet:
    """Ordered body parts; the order is also the compositing order."""

    def __init__(self, limbs: Sequence[Limb]):
        seen: set[tuple[int, int]] = set()
        for limb in limbs:
            if not (0 <= limb.a < NUM_JOINTS and 0 <= limb.b < NUM_JOINTS):
                raise GeometryError(f"Limb {limb.name} has joint index outside [0, {NUM_JOINTS})")
            key = (min(limb.a, limb.b), max(limb.a, limb.b))
            if key in seen:
                raise GeometryError(f"Duplicate limb {limb.name}")
            seen.add(key)
        self.limbs: tuple[Limb, ...] = tuple(limbs)

    def __len__(self) -> int:
        return len(self.limbs)

    def __iter__(self) -> Iterator[Limb]:
        return iter(self.limbs)

    def __getitem__(self, index: int) -> Limb:
        return self.limbs[index]

    @classmethod
    def coco_body(cls, limb_ratio: float = 0.25, head_ratio: float = 0.5) -> "LimbSet":
        """Torso, arms, legs and the neck-nose head part (13 parts)."""
        parts = [Limb(a, b, limb_ratio, name) for a, b, name in _TORSO + _LIMBS]
        parts.append(Limb(1, 0, head_ratio, "head"))
        return cls(parts)

    @classmethod
    def with_head_ring(cls, limb_ratio: float = 0.25, head_ratio: float = 0.5) -> "LimbSet":
        """``coco_body`` plus nose-eye-ear segments (17 parts)."""
        body = cls.coco_body(limb_ratio, head_ratio).limbs
        ring = [Limb(a, b, limb_ratio, name) for a, b, name in _HEAD_RING]
        return cls(list(body) + ring)

    @classmethod
    def named(cls, name: str) -> "LimbSet":
        if name == "coco_body":
            return cls.coco_body()
        if name == "head_ring":
            return cls.with_head_ring()
        raise ValueError(f"Unknown limb set: {name}")

    def visible_limbs(self, sk: Skeleton) -> list[int]:
        return [i for i, limb in enumerate(self.limbs) if sk.visible[limb.a] and sk.visible[limb.b]]

    def lengths(self, sk: Skeleton) -> np.ndarray:
        """Segment length per limb; NaN where an endpoint is invisible."""
        out = np.full(len(self.limbs), np.nan)
        for i in self.visible_limbs(sk):
            limb = self.limbs[i]
            out[i] = float(np.linalg.norm(sk.joints[limb.b] - sk.joints[limb.a]))
        return out
