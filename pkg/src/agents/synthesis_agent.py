"""Synthesis agent: plans dataset-expansion jobs and renders them into clips."""
import threading
from collections.abc import Iterable
from concurrent.futures import ThreadPoolExecutor, as_completed
from itertools import cycle, islice
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from loguru import logger

from ..config import SynthesisConfig
from ..models.conditioning import ReferenceSet, conditioning_for
from ..schemas.models import (
    ClipManifest,
    ClipRecord,
    ProvenanceRecord,
    SkeletonSource,
    SynthesisJob,
)
from ..skeleton.skeleton import Skeleton, SkeletonSequence
from ..skeleton.transforms import Homography, apply_homography, sample_homography
from ..utils.checkpoint import file_sha256
from ..utils.errors import ManifestValidationError
from ..utils.image_io import load_background, load_image, save_frames, to_grayscale
from ..utils.rng import derive_rng, derive_seed
from ..utils.skeleton_io import load_people
from .compositor_agent import CompositorAgent, people_at
from .trajectory_agent import TrajectoryAgent

PROVENANCE_FILE = "provenance.json"
Backgrounds = Union[np.ndarray, Sequence[np.ndarray]]


def render_video(
    compositor: CompositorAgent,
    references: ReferenceSet,
    background: Backgrounds,
    people: Union[SkeletonSequence, Sequence[SkeletonSequence]],
) -> List[np.ndarray]:
    """One generated frame per skeleton frame; frame ``t`` sees only its own skeletons.

    ``background`` is one image or a per-frame list.
    """
    if isinstance(people, SkeletonSequence):
        people = [people]
    if not people:
        raise ValueError("render_video needs at least one skeleton sequence")
    length = len(people[0])
    if any(len(p) != length for p in people):
        raise ValueError("All persons of a clip must have the same number of frames")
    if isinstance(background, np.ndarray) and background.ndim == 3:
        backgrounds: Sequence[np.ndarray] = [background] * length
    else:
        backgrounds = list(background)
        if len(backgrounds) != length:
            raise ValueError(f"{len(backgrounds)} backgrounds for {length} frames")

    frames = []
    for t in range(length):
        stack = conditioning_for(
            references, backgrounds[t], people_at(people, t), compositor.limbs
        )
        frames.append(compositor.render(stack.to_array()))
    return frames


# Job planning


def _check_nonempty(manifest: ClipManifest) -> None:
    if not manifest.clips:
        raise ValueError("Manifest has no clips")
    if not manifest.subjects:
        raise ValueError("Manifest has no subjects")


def _background_for(
    manifest: ClipManifest, clip: Optional[ClipRecord], subject_id: str, counter: int
) -> str:
    """Original background for an unchanged subject, else the pool round-robin."""
    if clip is not None and clip.background and clip.subject_id == subject_id:
        return clip.background
    if manifest.backgrounds:
        return manifest.backgrounds[counter % len(manifest.backgrounds)]
    if clip is not None and clip.background:
        return clip.background
    raise ValueError(f"No background available for subject {subject_id}: the pool is empty")


def _real_source(clip: ClipRecord) -> SkeletonSource:
    return SkeletonSource(origin="real", skeleton_file=clip.skeleton_file, clip_id=clip.clip_id)


def expand_dataset(
    manifest: ClipManifest,
    exclude_subjects: Iterable[str] = (),
    exclude_clips: Iterable[str] = (),
) -> List[SynthesisJob]:
    """Pair every clip's skeletons with every subject: ``clips x subjects`` jobs."""
    _check_nonempty(manifest)
    skip_subjects, skip_clips = set(exclude_subjects), set(exclude_clips)
    subjects = [s.subject_id for s in manifest.subjects if s.subject_id not in skip_subjects]
    jobs = []
    for clip in manifest.clips:
        if clip.clip_id in skip_clips:
            continue
        for subject_id in subjects:
            jobs.append(
                SynthesisJob(
                    output_clip_id=f"{clip.clip_id}__{subject_id}",
                    action_label=clip.action_label,
                    subject_id=subject_id,
                    background=_background_for(manifest, clip, subject_id, len(jobs)),
                    source=_real_source(clip),
                )
            )
    logger.info(f"Expansion plan: {len(jobs)} jobs")
    return jobs


def substitute_subjects(
    manifest: ClipManifest,
    new_subjects: Sequence[str],
    exclude_subjects: Iterable[str] = (),
    exclude_clips: Iterable[str] = (),
) -> List[SynthesisJob]:
    """Re-render each clip with a replacement subject; originals map round-robin."""
    _check_nonempty(manifest)
    if not new_subjects:
        raise ValueError("No replacement subjects given")
    known = {s.subject_id for s in manifest.subjects}
    missing = [s for s in new_subjects if s not in known]
    if missing:
        raise ValueError(f"Replacement subjects {missing} are not in the manifest")
    skip_subjects, skip_clips = set(exclude_subjects), set(exclude_clips)
    clips = [
        c
        for c in manifest.clips
        if c.clip_id not in skip_clips and c.subject_id not in skip_subjects
    ]
    originals = list(dict.fromkeys(c.subject_id for c in clips))
    overlap = set(originals) & set(new_subjects)
    if overlap:
        raise ValueError(f"Replacement subjects {sorted(overlap)} already perform clips")
    mapping = {old: new_subjects[i % len(new_subjects)] for i, old in enumerate(originals)}

    jobs = []
    for clip in clips:
        subject_id = mapping[clip.subject_id]
        jobs.append(
            SynthesisJob(
                output_clip_id=f"{clip.clip_id}__{subject_id}",
                action_label=clip.action_label,
                subject_id=subject_id,
                background=_background_for(manifest, clip, subject_id, len(jobs)),
                source=_real_source(clip),
            )
        )
    logger.info(f"Substitution plan: {len(jobs)} jobs over {len(mapping)} original subjects")
    return jobs


def inject_new_actions(
    skeleton_files: Mapping[str, Sequence[Path]],
    manifest: ClipManifest,
    count: int,
    seed: int,
    exclude_subjects: Iterable[str] = (),
) -> List[SynthesisJob]:
    """``count`` external performances per (subject, new action) pair.

    Every external file is parsed up front so a bad file fails the plan.
    """
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    if not manifest.subjects:
        raise ValueError("Manifest has no subjects")
    for label, paths in skeleton_files.items():
        if not paths:
            raise ValueError(f"No skeleton files for new action '{label}'")
        for path in paths:
            load_people(path)

    skip = set(exclude_subjects)
    subjects = [s.subject_id for s in manifest.subjects if s.subject_id not in skip]
    jobs = []
    for s, subject_id in enumerate(subjects):
        for a, (label, paths) in enumerate(skeleton_files.items()):
            rng = derive_rng(seed, "inject.sample", s * len(skeleton_files) + a)
            picks = rng.choice(len(paths), size=count, replace=count > len(paths))
            for j, p in enumerate(picks):
                jobs.append(
                    SynthesisJob(
                        output_clip_id=f"{label}__{subject_id}__{j:02d}",
                        action_label=label,
                        subject_id=subject_id,
                        background=_background_for(manifest, None, subject_id, len(jobs)),
                        source=SkeletonSource(origin="real", skeleton_file=str(paths[int(p)])),
                    )
                )
    logger.info(f"Injection plan: {len(jobs)} jobs")
    return jobs


def plan_generated_jobs(
    manifest: ClipManifest,
    label_names: Sequence[str],
    per_label: int,
    seed: int,
    exclude_subjects: Iterable[str] = (),
) -> List[SynthesisJob]:
    """Jobs rendering trajectory-GAN samples, subjects assigned round-robin."""
    if per_label < 0:
        raise ValueError(f"per_label must be non-negative, got {per_label}")
    skip = set(exclude_subjects)
    subjects = [s.subject_id for s in manifest.subjects if s.subject_id not in skip]
    if not subjects:
        raise ValueError("Manifest has no usable subjects")
    jobs = []
    for a, label in enumerate(label_names):
        for j in range(per_label):
            index = a * per_label + j
            subject_id = subjects[index % len(subjects)]
            jobs.append(
                SynthesisJob(
                    output_clip_id=f"generated__{label}__{j:04d}",
                    action_label=label,
                    subject_id=subject_id,
                    background=_background_for(manifest, None, subject_id, index),
                    source=SkeletonSource(
                        origin="generated",
                        label_index=a,
                        sample_seed=derive_seed(seed, "generated.sample", index),
                    ),
                )
            )
    logger.info(f"Generated-trajectory plan: {len(jobs)} jobs")
    return jobs


def perspective_augment(
    jobs: Sequence[SynthesisJob], manifest: ClipManifest, seed: int, jitter: float
) -> List[SynthesisJob]:
    """Wrap every job's skeleton source in a sampled homography and redraw its background."""
    if not 0.0 <= jitter <= 0.25:
        raise ValueError(f"jitter must be in [0, 0.25], got {jitter}")
    out = []
    for i, job in enumerate(jobs):
        h = sample_homography(derive_rng(seed, "augment.homography", i), jitter)
        background = job.background
        if manifest.backgrounds:
            pick = derive_rng(seed, "augment.background", i).integers(len(manifest.backgrounds))
            background = manifest.backgrounds[int(pick)]
        out.append(
            SynthesisJob(
                output_clip_id=f"{job.output_clip_id}__persp",
                action_label=job.action_label,
                subject_id=job.subject_id,
                background=background,
                source=SkeletonSource(
                    origin="transformed", homography=h.to_list(), base=job.source
                ),
            )
        )
    logger.info(f"Perspective augmentation: {len(out)} jobs (jitter={jitter})")
    return out


def validate_jobs(jobs: Sequence[SynthesisJob], manifest: ClipManifest) -> List[str]:
    """Every asset a job references that the manifest cannot resolve."""
    errors = []
    subjects = {s.subject_id: s for s in manifest.subjects}
    for job in jobs:
        owner = f"job '{job.output_clip_id}'"
        subject = subjects.get(job.subject_id)
        if subject is None:
            errors.append(f"{owner}: unknown subject '{job.subject_id}'")
        elif not subject.reference_frames:
            errors.append(f"{owner}: subject '{job.subject_id}' has no reference frames")
        if not manifest.resolve(job.background).exists():
            errors.append(f"{owner}: background not found: {job.background}")
        source: Optional[SkeletonSource] = job.source
        while source is not None:
            real = source.origin == "real"
            if real and not manifest.resolve(source.skeleton_file or "").exists():
                errors.append(f"{owner}: skeleton file not found: {source.skeleton_file}")
            source = source.base
    return errors


def source_clip_id(source: SkeletonSource) -> Optional[str]:
    while source.base is not None:
        source = source.base
    return source.clip_id


# Job execution


class SynthesisAgent:
    """Execute synthesis jobs into ``<out>/<job_id>/`` frame directories.

    Each worker thread loads its own model handles from the checkpoints.
    """

    def __init__(
        self,
        config: SynthesisConfig,
        manifest: ClipManifest,
        frame_checkpoint: Path,
        trajectory_checkpoint: Optional[Path] = None,
        seed: int = 0,
    ):
        self.config = config
        self.manifest = manifest
        self.frame_checkpoint = Path(frame_checkpoint)
        self.trajectory_checkpoint = trajectory_checkpoint
        self.seed = seed
        self.frame_sha = file_sha256(self.frame_checkpoint)
        self.trajectory_sha = file_sha256(trajectory_checkpoint) if trajectory_checkpoint else None
        self._local = threading.local()

    def compositor(self) -> CompositorAgent:
        if not hasattr(self._local, "compositor"):
            self._local.compositor = CompositorAgent.load(self.frame_checkpoint)
        return self._local.compositor

    def trajectory(self) -> TrajectoryAgent:
        if self.trajectory_checkpoint is None:
            raise ValueError("Job needs generated skeletons but no trajectory checkpoint was given")
        if not hasattr(self._local, "trajectory"):
            self._local.trajectory = TrajectoryAgent.load(self.trajectory_checkpoint)
        return self._local.trajectory

    def resolve_people(self, source: SkeletonSource) -> List[SkeletonSequence]:
        if source.origin == "real":
            return load_people(self.manifest.resolve(source.skeleton_file or ""))
        if source.origin == "generated":
            assert source.label_index is not None and source.sample_seed is not None
            return [self.trajectory().sample_one(source.label_index, source.sample_seed)]
        assert source.base is not None and source.homography is not None
        h = Homography(np.asarray(source.homography, dtype=np.float64))
        return [apply_homography(p, h) for p in self.resolve_people(source.base)]

    def references(self, subject_id: str, num_people: int) -> ReferenceSet:
        """Exactly ``k`` references of the subject, cycling its frames when it has fewer."""
        subject = self.manifest.subject(subject_id)
        if not subject.reference_frames:
            raise ValueError(f"Subject {subject_id} has no reference frames")
        k = self.compositor().config.k
        size = self.compositor().config.size
        images: List[np.ndarray] = []
        people: List[List[Skeleton]] = []
        for ref in islice(cycle(subject.reference_frames), k):
            images.append(load_image(self.manifest.resolve(ref.image), size))
            persons = load_people(self.manifest.resolve(ref.skeleton_file))
            if num_people == 1:
                people.append([persons[ref.person][ref.frame]])
            else:
                people.append(people_at(persons, ref.frame))
        return ReferenceSet(images, people)

    def render_job(self, job: SynthesisJob) -> List[np.ndarray]:
        people = self.resolve_people(job.source)
        size = self.compositor().config.size
        backgrounds = [
            load_background(self.manifest.resolve(job.background), size, t)
            for t in range(len(people[0]))
        ]
        return render_video(
            self.compositor(), self.references(job.subject_id, len(people)), backgrounds, people
        )

    def run_job(self, job: SynthesisJob, out_dir: Path, grayscale_prob: float) -> str:
        """Render one job; returns ``'success'`` or ``'skipped'``."""
        job_dir = Path(out_dir) / job.job_id
        if (job_dir / PROVENANCE_FILE).exists():
            logger.warning(f"Job {job.job_id} ({job.output_clip_id}) already rendered, skipping")
            return "skipped"

        frames = self.render_job(job)
        gray_seed = derive_seed(self.seed, f"grayscale.{job.job_id}")
        grayscale = bool(np.random.default_rng(gray_seed).random() < grayscale_prob)
        if grayscale:
            frames = [to_grayscale(f) for f in frames]
        save_frames(job_dir, frames)

        seeds: Dict[str, int] = {"run": self.seed, "grayscale": gray_seed}
        source: Optional[SkeletonSource] = job.source
        while source is not None:
            if source.sample_seed is not None:
                seeds["sample"] = source.sample_seed
            source = source.base
        record = ProvenanceRecord(
            job=job,
            source_clip_id=source_clip_id(job.source),
            subject_id=job.subject_id,
            skeleton_origin=job.source.origin,
            homography=job.source.homography,
            frame_checkpoint_sha256=self.frame_sha,
            trajectory_checkpoint_sha256=self.trajectory_sha,
            seeds=seeds,
            grayscale=grayscale,
            frame_count=len(frames),
        )
        (job_dir / PROVENANCE_FILE).write_text(record.model_dump_json(indent=2), encoding="utf-8")
        logger.debug(f"Rendered {job.output_clip_id}: {len(frames)} frames -> {job_dir}")
        return "success"

    def run(
        self,
        jobs: Sequence[SynthesisJob],
        out_dir: Path,
        workers: Optional[int] = None,
        grayscale_prob: Optional[float] = None,
    ) -> Dict[str, int]:
        """Render every job, resuming past ones that already have provenance."""
        errors = validate_jobs(jobs, self.manifest)
        if errors:
            raise ManifestValidationError(errors)
        workers = workers or self.config.workers
        grayscale_prob = self.config.grayscale_prob if grayscale_prob is None else grayscale_prob
        stats = {"total": len(jobs), "success": 0, "failed": 0, "skipped": 0}
        logger.info(f"Rendering {len(jobs)} jobs with {workers} worker(s) -> {out_dir}")

        def attempt(job: SynthesisJob) -> str:
            try:
                return self.run_job(job, out_dir, grayscale_prob)
            except Exception as e:
                logger.error(f"Job {job.output_clip_id} failed: {e}")
                return "failed"

        if workers == 1:
            outcomes = [attempt(job) for job in jobs]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(attempt, job) for job in jobs]
                outcomes = [f.result() for f in as_completed(futures)]
        for outcome in outcomes:
            stats[outcome] += 1
        logger.info(
            f"Rendered {stats['success']}, skipped {stats['skipped']}, failed {stats['failed']} "
            f"of {stats['total']} jobs"
        )
        return stats
