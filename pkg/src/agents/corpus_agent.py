"""Corpus agent: procedural stick-figure datasets with separable motion families."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from ..schemas.models import ClipManifest, ClipRecord, ReferenceFrame, SubjectRecord, ToyCorpusSpec
from ..skeleton.raster import limb_capsule
from ..skeleton.skeleton import NUM_JOINTS, LimbSet, Skeleton, SkeletonSequence
from ..utils.image_io import frame_path, save_image
from ..utils.manifest_io import save_manifest
from ..utils.rng import derive_rng
from ..utils.skeleton_io import save_skeleton_sequence

# Rest pose around the body center, normalized units, y pointing down
REST_POSE = np.array(
    [
        [0.00, -0.30],  # nose
        [0.00, -0.22],  # neck
        [-0.08, -0.22],  # r_shoulder
        [-0.10, -0.10],  # r_elbow
        [-0.11, 0.00],  # r_wrist
        [0.08, -0.22],  # l_shoulder
        [0.10, -0.10],  # l_elbow
        [0.11, 0.00],  # l_wrist
        [-0.05, 0.02],  # r_hip
        [-0.05, 0.16],  # r_knee
        [-0.05, 0.30],  # r_ankle
        [0.05, 0.02],  # l_hip
        [0.05, 0.16],  # l_knee
        [0.05, 0.30],  # l_ankle
        [-0.02, -0.32],  # r_eye
        [0.02, -0.32],  # l_eye
        [-0.04, -0.31],  # r_ear
        [0.04, -0.31],  # l_ear
    ]
)
BODY_CENTER = np.array([0.5, 0.55])

R_ARM = (2, [3, 4])
L_ARM = (5, [6, 7])
L_LEG = (11, [12, 13])


def _rotate(pose: np.ndarray, chain: Tuple[int, List[int]], angle: float) -> np.ndarray:
    pivot, joints = chain
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    pose = pose.copy()
    pose[joints] = pose[pivot] + (pose[joints] - pose[pivot]) @ rot.T
    return pose


def _static(pose: np.ndarray, phase: float, amp: float) -> np.ndarray:
    return pose


def _sine_wave(pose: np.ndarray, phase: float, amp: float) -> np.ndarray:
    angle = 1.2 * amp * np.sin(phase)
    return _rotate(_rotate(pose, R_ARM, angle), L_ARM, -angle)


def _drift(pose: np.ndarray, phase: float, amp: float) -> np.ndarray:
    return pose + np.array([0.12 * amp * (phase / np.pi - 1.0), 0.0])


def _bob(pose: np.ndarray, phase: float, amp: float) -> np.ndarray:
    return pose + np.array([0.0, 0.06 * amp * np.sin(phase)])


def _wave(pose: np.ndarray, phase: float, amp: float) -> np.ndarray:
    return _rotate(pose, R_ARM, -(1.5 + 0.6 * amp * np.sin(phase)))


def _kick(pose: np.ndarray, phase: float, amp: float) -> np.ndarray:
    return _rotate(pose, L_LEG, -0.8 * amp * (1.0 - np.cos(phase)) / 2.0)


MOTION_FAMILIES: Dict[str, Callable[[np.ndarray, float, float], np.ndarray]] = {
    "sine-wave": _sine_wave,
    "static": _static,
    "drift": _drift,
    "bob": _bob,
    "wave": _wave,
    "kick": _kick,
}


def default_families(num_labels: int) -> List[str]:
    names = list(MOTION_FAMILIES)
    if num_labels > len(names):
        raise ValueError(f"Only {len(names)} motion families exist, {num_labels} labels requested")
    return names[:num_labels]


def make_sequence(
    family: str, frames: int, noise: float, rng: np.random.Generator
) -> SkeletonSequence:
    """One performance of ``family`` with small per-sequence placement, speed and noise jitter."""
    motion = MOTION_FAMILIES[family]
    center = BODY_CENTER + rng.uniform(-0.02, 0.02, size=2)
    scale = rng.uniform(0.95, 1.05)
    amp = rng.uniform(0.9, 1.1)
    phase0 = rng.uniform(-0.2, 0.2)
    out = []
    for t in range(frames):
        phase = phase0 + 2.0 * np.pi * t / frames
        pose = center + motion(REST_POSE * scale, phase, amp)
        pose = pose + noise * rng.standard_normal(pose.shape)
        out.append(Skeleton(np.clip(pose, 0.0, 1.0), np.ones(NUM_JOINTS, dtype=bool)))
    return SkeletonSequence(out)


@dataclass
class Appearance:
    """Flat colors per body region modulated by a diagonal stripe texture."""

    shirt: np.ndarray
    pants: np.ndarray
    skin: np.ndarray
    stripe_period: float

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "Appearance":
        return cls(
            shirt=rng.uniform(0.2, 0.9, size=3),
            pants=rng.uniform(0.1, 0.7, size=3),
            skin=np.array([0.85, 0.65, 0.5]) * rng.uniform(0.7, 1.1),
            stripe_period=float(rng.uniform(4.0, 10.0)),
        )

    def color_for(self, limb_name: str) -> np.ndarray:
        if limb_name == "head" or limb_name.startswith(("nose", "r_eye", "l_eye")):
            return self.skin
        if limb_name.endswith(("thigh", "shin")):
            return self.pants
        return self.shirt


def make_background(size: int, rng: np.random.Generator) -> np.ndarray:
    """Two-color vertical gradient with a soft horizontal ripple."""
    top, bottom = rng.uniform(0.0, 1.0, size=(2, 3))
    y = np.linspace(0.0, 1.0, size)[:, None, None]
    x = np.linspace(0.0, 1.0, size)[None, :, None]
    ripple = 0.05 * np.sin(2.0 * np.pi * (rng.uniform(1.0, 3.0) * x + rng.uniform()))
    return np.clip(top * (1.0 - y) + bottom * y + ripple, 0.0, 1.0).astype(np.float32)


def render_figure(
    sk: Skeleton, appearance: Appearance, background: np.ndarray, limbs: Optional[LimbSet] = None
) -> np.ndarray:
    """Paint the skeleton's limb capsules in limb-set order over ``background``."""
    limbs = limbs or LimbSet.coco_body()
    h, w = background.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w]
    texture = 0.85 + 0.15 * np.sin(2.0 * np.pi * (xx + yy) / appearance.stripe_period)
    frame = background.astype(np.float32).copy()
    for i, limb in enumerate(limbs):
        region = limb_capsule(sk, limbs, i, h, w)
        frame[region] = (appearance.color_for(limb.name)[None, :] * texture[region][:, None])
    return np.clip(frame, 0.0, 1.0).astype(np.float32)


@dataclass
class ToyCorpus:
    """Labeled sequences with the subject and background each clip is rendered with."""

    spec: ToyCorpusSpec
    label_names: List[str]
    sequences: List[Tuple[int, SkeletonSequence]]
    clip_subjects: List[int]
    clip_backgrounds: List[int]
    appearances: List[Appearance]
    backgrounds: List[np.ndarray] = field(repr=False)

    def __len__(self) -> int:
        return len(self.sequences)

    def clip_id(self, index: int) -> str:
        label, _ = self.sequences[index]
        return f"{self.label_names[label]}_{index:04d}"

    def subject_id(self, subject: int) -> str:
        return f"subject_{subject:02d}"

    def render_clip(self, index: int) -> List[np.ndarray]:
        _, seq = self.sequences[index]
        appearance = self.appearances[self.clip_subjects[index]]
        background = self.backgrounds[self.clip_backgrounds[index]]
        return [render_figure(sk, appearance, background) for sk in seq]


def make_toy_corpus(spec: ToyCorpusSpec) -> ToyCorpus:
    """Deterministic corpus: ``num_labels * per_label`` sequences, subjects round-robin."""
    families = spec.families or default_families(spec.num_labels)
    unknown = [f for f in families if f not in MOTION_FAMILIES]
    if unknown:
        raise ValueError(f"Unknown motion families {unknown}; known: {sorted(MOTION_FAMILIES)}")

    sequences, clip_subjects, clip_backgrounds = [], [], []
    n_backgrounds = max(2, spec.subjects)
    for label, family in enumerate(families):
        for i in range(spec.per_label):
            index = len(sequences)
            rng = derive_rng(spec.seed, "toy.sequence", index)
            sequences.append((label, make_sequence(family, spec.frames_per_clip, spec.noise, rng)))
            clip_subjects.append(i % spec.subjects)
            clip_backgrounds.append(index % n_backgrounds)

    return ToyCorpus(
        spec=spec,
        label_names=list(families),
        sequences=sequences,
        clip_subjects=clip_subjects,
        clip_backgrounds=clip_backgrounds,
        appearances=[
            Appearance.sample(derive_rng(spec.seed, "toy.subject", s)) for s in range(spec.subjects)
        ],
        backgrounds=[
            make_background(spec.size, derive_rng(spec.seed, "toy.background", b))
            for b in range(n_backgrounds)
        ],
    )


class CorpusAgent:
    """Write a toy corpus to disk as skeleton JSON, PNG frames and a manifest."""

    def __init__(self, spec: ToyCorpusSpec, reference_frames: int = 4):
        self.spec = spec
        self.reference_frames = reference_frames

    def write(self, out_dir: Path, render_frames: bool = True) -> ClipManifest:
        out_dir = Path(out_dir)
        corpus = make_toy_corpus(self.spec)
        size = self.spec.size
        logger.info(
            f"Writing toy corpus: {len(corpus)} clips, {len(corpus.label_names)} labels, "
            f"{self.spec.subjects} subjects -> {out_dir}"
        )

        backgrounds = []
        for b, image in enumerate(corpus.backgrounds):
            rel = f"backgrounds/bg_{b:02d}.png"
            save_image(out_dir / rel, image)
            backgrounds.append(rel)

        clips = []
        first_clip: Dict[int, int] = {}
        for i, (label, seq) in enumerate(corpus.sequences):
            clip_id = corpus.clip_id(i)
            skeleton_rel = f"skeletons/{clip_id}.json"
            save_skeleton_sequence(out_dir / skeleton_rel, seq, size, size)
            frames_rel = None
            if render_frames:
                frames_rel = f"frames/{clip_id}"
                for t, frame in enumerate(corpus.render_clip(i)):
                    save_image(frame_path(out_dir / frames_rel, t), frame)
            subject = corpus.clip_subjects[i]
            first_clip.setdefault(subject, i)
            clips.append(
                ClipRecord(
                    clip_id=clip_id,
                    action_label=corpus.label_names[label],
                    subject_id=corpus.subject_id(subject),
                    skeleton_file=skeleton_rel,
                    frames_dir=frames_rel,
                    background=backgrounds[corpus.clip_backgrounds[i]],
                )
            )

        subjects = []
        for s in range(self.spec.subjects):
            refs = []
            if render_frames and s in first_clip:
                clip = clips[first_clip[s]]
                frames = self.spec.frames_per_clip
                step = max(1, frames // self.reference_frames)
                for t in range(0, frames, step)[: self.reference_frames]:
                    refs.append(
                        ReferenceFrame(
                            image=str(Path(clip.frames_dir or "") / frame_path(Path(""), t)),
                            skeleton_file=clip.skeleton_file,
                            frame=t,
                        )
                    )
            subjects.append(SubjectRecord(subject_id=corpus.subject_id(s), reference_frames=refs))

        manifest = ClipManifest(
            clips=clips, subjects=subjects, backgrounds=backgrounds, labels=corpus.label_names
        ).with_base_dir(out_dir)
        save_manifest(out_dir / "manifest.json", manifest)
        logger.info(f"Toy corpus manifest: {out_dir / 'manifest.json'}")
        return manifest
