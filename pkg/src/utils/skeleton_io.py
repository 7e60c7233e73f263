"""Skeleton sequence JSON files.

Single person: ``{"width", "height", "frames": [[[x, y, v] x 18], ...]}``.
Several people: ``{"width", "height", "persons": [{"frames": ...}, ...]}``.
Coordinates are pixels on disk and normalized in memory.
"""
import json
from pathlib import Path
from typing import Any, List, Sequence

import numpy as np

from ..skeleton.skeleton import NUM_JOINTS, Skeleton, SkeletonSequence
from .errors import SkeletonFileError


def _parse_frames(frames: Any, width: int, height: int, where: str) -> SkeletonSequence:
    if not isinstance(frames, list) or not frames:
        raise SkeletonFileError(f"{where}: 'frames' must be a non-empty list")
    out = []
    scale = np.array([width, height], dtype=np.float64)
    for t, frame in enumerate(frames):
        try:
            arr = np.asarray(frame, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise SkeletonFileError(f"{where}: frame {t} is not numeric") from e
        if arr.shape != (NUM_JOINTS, 3):
            raise SkeletonFileError(
                f"{where}: frame {t} must hold {NUM_JOINTS} [x, y, v] triples, "
                f"got shape {arr.shape}"
            )
        visible = arr[:, 2] > 0.5
        out.append(Skeleton(arr[:, :2] / scale, visible))
    return SkeletonSequence(out, width, height)


def parse_skeleton_data(data: Any, where: str = "skeleton data") -> List[SkeletonSequence]:
    """Normalized sequences, one per person."""
    if not isinstance(data, dict):
        raise SkeletonFileError(f"{where}: expected a JSON object")
    try:
        width, height = int(data["width"]), int(data["height"])
    except (KeyError, TypeError, ValueError) as e:
        raise SkeletonFileError(f"{where}: missing or invalid width/height") from e
    if width <= 0 or height <= 0:
        raise SkeletonFileError(f"{where}: width and height must be positive")
    if "persons" in data:
        persons = data["persons"]
        if not isinstance(persons, list) or not persons:
            raise SkeletonFileError(f"{where}: 'persons' must be a non-empty list")
        seqs = [
            _parse_frames(p.get("frames") if isinstance(p, dict) else None, width, height,
                          f"{where} person {i}")
            for i, p in enumerate(persons)
        ]
        lengths = {len(s) for s in seqs}
        if len(lengths) != 1:
            raise SkeletonFileError(
                f"{where}: persons have different frame counts {sorted(lengths)}"
            )
        return seqs
    return [_parse_frames(data.get("frames"), width, height, where)]


def load_people(path: Path) -> List[SkeletonSequence]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise SkeletonFileError(f"{path}: not valid JSON ({e})") from e
    return parse_skeleton_data(data, str(path))


def load_skeleton_sequence(path: Path, person: int = 0) -> SkeletonSequence:
    people = load_people(path)
    if not 0 <= person < len(people):
        raise SkeletonFileError(f"{path}: no person {person} (file has {len(people)})")
    return people[person]


def _frames_payload(seq: SkeletonSequence, width: int, height: int) -> list:
    frames = []
    for sk in seq:
        px = sk.joints * np.array([width, height], dtype=np.float64)
        frames.append(
            [[float(x), float(y), int(v)] for (x, y), v in zip(px.tolist(), sk.visible.tolist())]
        )
    return frames


def save_people(path: Path, people: Sequence[SkeletonSequence], width: int, height: int) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data: dict = {"width": int(width), "height": int(height)}
    if len(people) == 1:
        data["frames"] = _frames_payload(people[0], width, height)
    else:
        data["persons"] = [{"frames": _frames_payload(p, width, height)} for p in people]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f)


def save_skeleton_sequence(
    path: Path, seq: SkeletonSequence, width: int = 0, height: int = 0
) -> None:
    """Write ``seq`` in pixels of ``width x height`` (defaults to its source size)."""
    save_people(path, [seq], width or seq.source_width, height or seq.source_height)
