"""Skeleton rasterization, limb capsules and binary morphology.

Pixel ``(i, j)`` of an ``H x W`` raster has its center at ``(j + 0.5, i + 0.5)``
in pixel units; a normalized point ``(x, y)`` sits at ``(x * W, y * H)``.
"""
from __future__ import annotations

from typing import Optional

import cv2
import numpy as np

from .skeleton import LimbSet, Skeleton


def pixel_centers(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    return xs + 0.5, ys + 0.5


def to_pixels(points: np.ndarray, height: int, width: int) -> np.ndarray:
    return np.asarray(points, dtype=np.float64) * np.array([width, height], dtype=np.float64)


def _segment_coords(
    a: np.ndarray, b: np.ndarray, height: int, width: int
) -> tuple[np.ndarray, np.ndarray]:
    """Projection parameter along ``a -> b`` and perpendicular distance, per pixel."""
    px, py = pixel_centers(height, width)
    d = b - a
    length_sq = float(d @ d)
    if length_sq == 0.0:
        return np.zeros_like(px), np.hypot(px - a[0], py - a[1])
    t = ((px - a[0]) * d[0] + (py - a[1]) * d[1]) / length_sq
    perp = np.abs((px - a[0]) * d[1] - (py - a[1]) * d[0]) / np.sqrt(length_sq)
    return t, perp


def segment_distance(a: np.ndarray, b: np.ndarray, height: int, width: int) -> np.ndarray:
    """Euclidean distance from every pixel center to the closed segment ``a-b`` (pixel units)."""
    px, py = pixel_centers(height, width)
    d = b - a
    length_sq = float(d @ d)
    if length_sq == 0.0:
        return np.hypot(px - a[0], py - a[1])
    t = np.clip(((px - a[0]) * d[0] + (py - a[1]) * d[1]) / length_sq, 0.0, 1.0)
    return np.hypot(px - (a[0] + t * d[0]), py - (a[1] + t * d[1]))


def capsule_mask(
    a: np.ndarray, b: np.ndarray, width_ratio: float, height: int, width: int
) -> np.ndarray:
    """Pixels within ``width_ratio * |b - a|`` of the segment, endpoints in pixel units."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    radius = width_ratio * float(np.linalg.norm(b - a))
    return segment_distance(a, b, height, width) <= radius


def limb_capsule(sk: Skeleton, limbs: LimbSet, index: int, height: int, width: int) -> np.ndarray:
    limb = limbs[index]
    if not (sk.visible[limb.a] and sk.visible[limb.b]):
        return np.zeros((height, width), dtype=bool)
    pts = to_pixels(sk.joints, height, width)
    return capsule_mask(pts[limb.a], pts[limb.b], limb.width_ratio, height, width)


def rasterize_skeleton(
    sk: Skeleton, height: int, width: int, limbs: Optional[LimbSet] = None
) -> np.ndarray:
    """One anti-aliased line channel per limb, shaped ``[H, W, L]``.

    Intensity is ``max(0, 1 - d)`` for pixel centers at perpendicular distance
    ``d`` whose projection falls on the segment, so a channel sums to roughly
    the limb's pixel length. Limbs with an invisible endpoint stay zero.
    """
    limbs = limbs or LimbSet.coco_body()
    out = np.zeros((height, width, len(limbs)), dtype=np.float32)
    pts = to_pixels(sk.joints, height, width)
    for i in limbs.visible_limbs(sk):
        limb = limbs[i]
        t, perp = _segment_coords(pts[limb.a], pts[limb.b], height, width)
        on_segment = (t >= 0.0) & (t <= 1.0)
        out[..., i] = np.where(on_segment, np.maximum(0.0, 1.0 - perp), 0.0)
    return out


def _disk(radius: int) -> np.ndarray:
    y, x = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    return (x * x + y * y <= radius * radius).astype(np.uint8)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Minkowski sum with a discrete disk; pixels outside the raster count as unset."""
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    out = cv2.dilate(
        mask.astype(np.uint8), _disk(radius), borderType=cv2.BORDER_CONSTANT, borderValue=0
    )
    return out.astype(bool)


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Erosion with a discrete disk; pixels outside the raster count as set."""
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    out = cv2.erode(
        mask.astype(np.uint8), _disk(radius), borderType=cv2.BORDER_CONSTANT, borderValue=1
    )
    return out.astype(bool)


def person_mask(
    sk: Skeleton, height: int, width: int, radius: int, limbs: Optional[LimbSet] = None
) -> np.ndarray:
    """Union of visible limb capsules, dilated by a disk of ``radius`` pixels."""
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    limbs = limbs or LimbSet.coco_body()
    union = np.zeros((height, width), dtype=bool)
    for i in limbs.visible_limbs(sk):
        union |= limb_capsule(sk, limbs, i, height, width)
    return dilate(union, radius)
