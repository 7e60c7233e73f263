"""Dataset manifest loading with whole-file validation."""
import json
from collections import Counter
from pathlib import Path
from typing import Dict, List, Sequence

from loguru import logger
from pydantic import TypeAdapter, ValidationError

from ..schemas.models import ClipManifest, SynthesisJob
from .errors import ManifestValidationError, SkeletonFileError
from .image_io import list_frames
from .skeleton_io import load_people


def manifest_to_json(manifest: ClipManifest) -> str:
    """Canonical text form: sorted keys, two-space indent, trailing newline."""
    return json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def save_manifest(path: Path, manifest: ClipManifest) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest_to_json(manifest), encoding="utf-8")


def _format_pydantic(e: ValidationError) -> List[str]:
    return [
        f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
    ]


def validate_manifest(manifest: ClipManifest, check_files: bool = True) -> List[str]:
    """Every referential-integrity violation in ``manifest``."""
    errors: List[str] = []

    for clip_id, n in Counter(c.clip_id for c in manifest.clips).items():
        if n > 1:
            errors.append(f"clip_id '{clip_id}' appears {n} times")
    for subject_id, n in Counter(s.subject_id for s in manifest.subjects).items():
        if n > 1:
            errors.append(f"subject_id '{subject_id}' appears {n} times")

    subject_ids = {s.subject_id for s in manifest.subjects}
    for clip in manifest.clips:
        if clip.subject_id not in subject_ids:
            errors.append(f"clip '{clip.clip_id}' references unknown subject '{clip.subject_id}'")
    if manifest.labels:
        known = set(manifest.labels)
        for clip in manifest.clips:
            if clip.action_label not in known:
                errors.append(
                    f"clip '{clip.clip_id}' has label '{clip.action_label}' not in labels list"
                )

    if not check_files:
        return errors

    frame_counts: Dict[str, int] = {}

    def skeleton_frames(path_str: str, owner: str) -> int:
        if path_str in frame_counts:
            return frame_counts[path_str]
        path = manifest.resolve(path_str)
        if not path.exists():
            errors.append(f"{owner}: skeleton file not found: {path_str}")
            frame_counts[path_str] = -1
            return -1
        try:
            frame_counts[path_str] = len(load_people(path)[0])
        except SkeletonFileError as e:
            errors.append(f"{owner}: {e}")
            frame_counts[path_str] = -1
        return frame_counts[path_str]

    for clip in manifest.clips:
        owner = f"clip '{clip.clip_id}'"
        n_skel = skeleton_frames(clip.skeleton_file, owner)
        if clip.frames_dir is not None:
            frames_dir = manifest.resolve(clip.frames_dir)
            if not frames_dir.is_dir():
                errors.append(f"{owner}: frames_dir not found: {clip.frames_dir}")
            else:
                n_frames = len(list_frames(frames_dir))
                if n_skel >= 0 and n_frames != n_skel:
                    errors.append(
                        f"{owner}: {n_frames} frames but {n_skel} skeletons in {clip.skeleton_file}"
                    )
        if clip.background is not None and not manifest.resolve(clip.background).exists():
            errors.append(f"{owner}: background not found: {clip.background}")

    for subject in manifest.subjects:
        for i, ref in enumerate(subject.reference_frames):
            owner = f"subject '{subject.subject_id}' reference {i}"
            if not manifest.resolve(ref.image).exists():
                errors.append(f"{owner}: image not found: {ref.image}")
            n_skel = skeleton_frames(ref.skeleton_file, owner)
            if n_skel >= 0 and ref.frame >= n_skel:
                errors.append(f"{owner}: frame {ref.frame} beyond {n_skel} skeleton frames")

    for background in manifest.backgrounds:
        if not manifest.resolve(background).exists():
            errors.append(f"background not found: {background}")
    return errors


def load_manifest(path: Path, check_files: bool = True) -> ClipManifest:
    """Parse and validate a manifest; paths inside resolve against its directory."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ManifestValidationError([f"{path}: not valid JSON ({e})"]) from e
    try:
        manifest = ClipManifest.model_validate(data)
    except ValidationError as e:
        raise ManifestValidationError(_format_pydantic(e)) from e
    manifest.with_base_dir(path.parent)

    errors = validate_manifest(manifest, check_files=check_files)
    if errors:
        raise ManifestValidationError(errors)
    logger.debug(
        f"Loaded manifest {path}: {len(manifest.clips)} clips, "
        f"{len(manifest.subjects)} subjects, {len(manifest.backgrounds)} backgrounds"
    )
    return manifest


_JOB_LIST = TypeAdapter(List[SynthesisJob])


def save_jobs(path: Path, jobs: Sequence[SynthesisJob]) -> None:
    """Write a job plan; each record carries its content-derived ``job_id``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_JOB_LIST.dump_json(list(jobs), indent=2) + b"\n")


def load_jobs(path: Path) -> List[SynthesisJob]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Job plan not found: {path}")
    try:
        return _JOB_LIST.validate_json(path.read_bytes())
    except ValidationError as e:
        raise ManifestValidationError(_format_pydantic(e)) from e
