"""Per-limb similarity warps and projective transforms of skeletons."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import cv2
import numpy as np
from loguru import logger

from ..utils.errors import DegenerateHomographyError, GeometryError, ShapeMismatchError
from .raster import capsule_mask, to_pixels
from .skeleton import Limb, Skeleton, SkeletonSequence

MAX_HOMOGRAPHY_ATTEMPTS = 10
MAX_JITTER = 0.25
_UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def similarity_from_segments(
    a: np.ndarray, b: np.ndarray, a2: np.ndarray, b2: np.ndarray
) -> np.ndarray:
    """2x3 rotation + uniform scale + translation taking ``a -> a2`` and ``b -> b2``."""
    za, zb = complex(a[0], a[1]), complex(b[0], b[1])
    za2, zb2 = complex(a2[0], a2[1]), complex(b2[0], b2[1])
    if abs(zb - za) < 1e-12:
        raise GeometryError("Source limb has zero length")
    s = (zb2 - za2) / (zb - za)
    t = za2 - s * za
    return np.array([[s.real, -s.imag, t.real], [s.imag, s.real, t.imag]], dtype=np.float64)


def limb_transform(src: Skeleton, dst: Skeleton, limb: Limb) -> np.ndarray:
    """Similarity mapping the limb's endpoints in ``src`` onto those in ``dst``."""
    for name, sk in (("source", src), ("target", dst)):
        if not (sk.visible[limb.a] and sk.visible[limb.b]):
            raise GeometryError(f"Limb {limb.name} has an invisible endpoint in the {name}")
    return similarity_from_segments(
        src.joints[limb.a], src.joints[limb.b], dst.joints[limb.a], dst.joints[limb.b]
    )


def transform_points(affine: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    return points @ affine[:, :2].T + affine[:, 2]


def warp_limb_patch(
    image: np.ndarray,
    src_sk: Skeleton,
    dst_sk: Skeleton,
    limb: Limb,
    out_size: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray]:
    """Carry the source limb capsule's pixels onto the target limb.

    ``image`` is ``[H, W, 3]`` in ``[0, 1]``; ``out_size`` is ``(H', W')``.
    Returns the warped patch (zero outside the mask) and the target capsule mask.
    """
    src_h, src_w = image.shape[:2]
    out_h, out_w = out_size
    src_px = Skeleton(to_pixels(src_sk.joints, src_h, src_w), src_sk.visible)
    dst_px = Skeleton(to_pixels(dst_sk.joints, out_h, out_w), dst_sk.visible)
    affine = limb_transform(src_px, dst_px, limb)

    # cv2 places pixel centers on integers; ours sit at +0.5
    linear = affine[:, :2]
    cv_affine = affine.copy()
    cv_affine[:, 2] = affine[:, 2] + linear @ np.array([0.5, 0.5]) - 0.5
    warped = cv2.warpAffine(
        np.ascontiguousarray(image, dtype=np.float32),
        cv_affine,
        (out_w, out_h),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_REPLICATE,
    )
    if warped.ndim == 2:
        warped = warped[..., None]
    mask = capsule_mask(
        dst_px.joints[limb.a], dst_px.joints[limb.b], limb.width_ratio, out_h, out_w
    )
    patch = np.where(mask[..., None], warped, 0.0).astype(np.float32)
    return patch, mask


@dataclass(frozen=True, eq=False)
class Homography:
    """Nonsingular 3x3 projective transform of normalized image coordinates."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ShapeMismatchError(f"Homography must be 3x3, got {m.shape}")
        if abs(np.linalg.det(m)) < 1e-12:
            raise GeometryError("Homography is singular")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(3)))

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        homogeneous = np.concatenate([points, np.ones((len(points), 1))], axis=1) @ self.matrix.T
        w = homogeneous[:, 2]
        if np.any(np.abs(w) < 1e-8):
            raise GeometryError("Point mapped to infinity by homography")
        return homogeneous[:, :2] / w[:, None]

    def to_list(self) -> list[list[float]]:
        return self.matrix.tolist()


def apply_homography(
    seq: SkeletonSequence, h: Union[Homography, np.ndarray]
) -> SkeletonSequence:
    """Map every visible joint projectively; invisible joints stay at ``(0, 0)``."""
    hom = h if isinstance(h, Homography) else Homography(h)
    frames = []
    for sk in seq:
        joints = np.zeros_like(sk.joints)
        if sk.visible.any():
            joints[sk.visible] = hom.apply_points(sk.joints[sk.visible])
        frames.append(Skeleton(joints, sk.visible))
    return SkeletonSequence(frames, seq.source_width, seq.source_height)


def _is_convex(quad: np.ndarray) -> bool:
    signs = []
    for i in range(4):
        p, q, r = quad[i], quad[(i + 1) % 4], quad[(i + 2) % 4]
        signs.append(np.sign((q[0] - p[0]) * (r[1] - q[1]) - (q[1] - p[1]) * (r[0] - q[0])))
    return all(s > 0 for s in signs) or all(s < 0 for s in signs)


def sample_homography(rng: np.random.Generator, jitter: float) -> Homography:
    """Homography taking the unit square to its corners displaced uniformly within ``jitter``."""
    if not 0.0 <= jitter <= MAX_JITTER:
        raise ValueError(f"jitter must be in [0, {MAX_JITTER}], got {jitter}")
    if jitter == 0.0:
        return Homography.identity()
    for attempt in range(MAX_HOMOGRAPHY_ATTEMPTS):
        corners = _UNIT_SQUARE + rng.uniform(-jitter, jitter, size=(4, 2))
        if _is_convex(corners):
            matrix = cv2.getPerspectiveTransform(
                _UNIT_SQUARE.astype(np.float32), corners.astype(np.float32)
            )
            if abs(np.linalg.det(matrix)) > 1e-8:
                return Homography(matrix)
        logger.warning(f"Degenerate homography sample (attempt {attempt + 1}), resampling")
    raise DegenerateHomographyError(
        f"No usable homography after {MAX_HOMOGRAPHY_ATTEMPTS} attempts (jitter={jitter})"
    )
