"""Evaluation agent: nearest-centroid oracles, trajectory statistics and frame metrics."""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..config import EvaluationConfig
from ..models.trajectory_networks import TIMESTEPS
from ..schemas.models import EvaluationReport
from ..skeleton.skeleton import FLAT_DIM, LimbSet, SkeletonSequence
from ..utils.errors import ShapeMismatchError
from ..utils.rng import derive_rng
from .trajectory_agent import TrajectoryAgent, prepare_trajectories

if TYPE_CHECKING:
    from ..schemas.models import ClipManifest
    from .compositor_agent import CompositorAgent


@dataclass
class ClassCentroids:
    """Per-label mean of flattened trajectories, ``[A, D]``."""

    centroids: np.ndarray

    @property
    def num_labels(self) -> int:
        return int(self.centroids.shape[0])


@dataclass
class TrajectoryStats:
    temporal_variance: np.ndarray
    limb_length_mean: np.ndarray
    limb_length_std: np.ndarray


def _flat(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    return data.reshape(len(data), -1)


def nearest_centroid(data: np.ndarray, labels: np.ndarray, num_labels: int) -> ClassCentroids:
    data = _flat(data)
    labels = np.asarray(labels, dtype=int)
    if len(data) != len(labels):
        raise ShapeMismatchError(f"{len(data)} examples but {len(labels)} labels")
    centroids = []
    for a in range(num_labels):
        members = data[labels == a]
        if len(members) == 0:
            raise ValueError(f"Label {a} has no examples; cannot form its centroid")
        centroids.append(members.mean(axis=0))
    return ClassCentroids(np.stack(centroids))


def classify_many(centroids: ClassCentroids, data: np.ndarray) -> np.ndarray:
    """Nearest centroid by Euclidean distance; ties go to the lower label index."""
    data = _flat(data)
    if data.shape[1] != centroids.centroids.shape[1]:
        raise ShapeMismatchError(
            f"Examples have {data.shape[1]} features, centroids {centroids.centroids.shape[1]}"
        )
    d2 = ((data[:, None, :] - centroids.centroids[None, :, :]) ** 2).sum(axis=-1)
    return np.argmin(d2, axis=1)


def classify(centroids: ClassCentroids, example: np.ndarray) -> int:
    return int(classify_many(centroids, np.asarray(example)[None])[0])


def accuracy(centroids: ClassCentroids, data: np.ndarray, labels: np.ndarray) -> float:
    if len(data) == 0:
        raise ValueError("Cannot score an empty set")
    return float(np.mean(classify_many(centroids, data) == np.asarray(labels)))


def per_class_accuracy(
    centroids: ClassCentroids, data: np.ndarray, labels: np.ndarray, names: Sequence[str]
) -> Dict[str, float]:
    predicted = classify_many(centroids, data)
    labels = np.asarray(labels)
    out = {}
    for a, name in enumerate(names):
        members = labels == a
        if members.any():
            out[name] = float(np.mean(predicted[members] == a))
    return out


def tstr_score(
    generated: np.ndarray,
    generated_labels: np.ndarray,
    real: np.ndarray,
    real_labels: np.ndarray,
    num_labels: int,
) -> float:
    """Train nearest-centroid on generated examples only, score on real ones."""
    missing = set(np.unique(real_labels).tolist()) - set(np.unique(generated_labels).tolist())
    if missing:
        raise ValueError(f"Real labels {sorted(missing)} have no generated examples")
    return accuracy(nearest_centroid(generated, generated_labels, num_labels), real, real_labels)


def _limb_length_moments(lengths: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mean = np.full(lengths.shape[1], np.nan)
    std = np.full(lengths.shape[1], np.nan)
    for j in range(lengths.shape[1]):
        col = lengths[:, j][~np.isnan(lengths[:, j])]
        if len(col):
            mean[j], std[j] = col.mean(), col.std()
    return mean, std


def trajectory_stats(
    sequences: Sequence[SkeletonSequence], limbs: Optional[LimbSet] = None
) -> TrajectoryStats:
    """Per-joint temporal variance and per-limb length mean/std.

    Temporal variance of a joint is the population variance over time of x
    plus that of y, averaged over sequences. Limb lengths pool every frame
    where both endpoints are visible.
    """
    if not sequences:
        raise ValueError("trajectory_stats needs at least one sequence")
    limbs = limbs or LimbSet.coco_body()
    variances = []
    lengths = []
    for seq in sequences:
        joints = np.stack([sk.joints for sk in seq])
        variances.append(joints.var(axis=0).sum(axis=-1))
        lengths.extend(limbs.lengths(sk) for sk in seq)
    mean, std = _limb_length_moments(np.stack(lengths))
    return TrajectoryStats(np.mean(variances, axis=0), mean, std)


def bone_length_drift(generated: TrajectoryStats, real: TrajectoryStats) -> float:
    """Mean absolute difference of per-limb mean lengths over limbs seen in both."""
    diff = np.abs(generated.limb_length_mean - real.limb_length_mean)
    diff = diff[~np.isnan(diff)]
    return float(diff.mean()) if len(diff) else float("nan")


def mean_pairwise_distance(data: np.ndarray) -> float:
    data = _flat(data)
    n = len(data)
    if n < 2:
        return 0.0
    sq = (data**2).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * data @ data.T, 0.0)
    iu = np.triu_indices(n, k=1)
    return float(np.sqrt(d2[iu]).mean())


def diversity_ratio(
    generated: np.ndarray,
    generated_labels: np.ndarray,
    real: np.ndarray,
    real_labels: np.ndarray,
    num_labels: int,
) -> float:
    """Mean within-class pairwise distance of generated over real, averaged over labels."""
    ratios = []
    for a in range(num_labels):
        real_d = mean_pairwise_distance(_flat(real)[np.asarray(real_labels) == a])
        if real_d > 0:
            gen_d = mean_pairwise_distance(_flat(generated)[np.asarray(generated_labels) == a])
            ratios.append(gen_d / real_d)
    return float(np.mean(ratios)) if ratios else float("nan")


def background_preservation(frame: np.ndarray, background: np.ndarray, mask: np.ndarray) -> float:
    """Mean absolute error between frame and background outside the person mask."""
    frame = np.asarray(frame, dtype=np.float64)
    background = np.asarray(background, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if frame.shape != background.shape or mask.shape != frame.shape[:2]:
        raise ShapeMismatchError(
            f"Frame {frame.shape}, background {background.shape} and mask {mask.shape} "
            "are not aligned"
        )
    outside = ~mask
    if not outside.any():
        raise ValueError("Mask covers the whole frame; background error is undefined")
    return float(np.abs(frame - background)[outside].mean())


def stratified_split(
    labels: np.ndarray, holdout: float, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Index arrays ``(train, held_out)``; every label keeps at least one training example."""
    labels = np.asarray(labels)
    train, held = [], []
    for a in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == a))
        n_hold = min(int(round(holdout * len(idx))), len(idx) - 1)
        held.extend(idx[:n_hold].tolist())
        train.extend(idx[n_hold:].tolist())
    return np.sort(np.asarray(train, dtype=int)), np.sort(np.asarray(held, dtype=int))


class EvaluationAgent:
    """Produce evaluation reports for trained trajectory and frame checkpoints."""

    def __init__(self, config: EvaluationConfig, seed: int = 0):
        self.config = config
        self.seed = seed

    def evaluate_trajectories(
        self,
        agent: TrajectoryAgent,
        examples: Sequence[Tuple[int, SkeletonSequence]],
        samples_per_label: Optional[int] = None,
    ) -> EvaluationReport:
        """TSTR, centroid accuracy, diversity and bone drift of ``agent``'s samples."""
        num_labels = agent.num_labels
        real, labels = prepare_trajectories(examples, num_labels)
        real = _flat(real)
        train_idx, held_idx = stratified_split(
            labels, self.config.holdout_fraction, derive_rng(self.seed, "eval.split")
        )
        if len(held_idx) == 0:
            logger.warning("Held-out split is empty; scoring on the training examples")
            held_idx = train_idx

        n = samples_per_label or self.config.samples_per_label
        generated = np.concatenate([agent.sample_flat(a, n, self.seed) for a in range(num_labels)])
        gen_labels = np.repeat(np.arange(num_labels), n)

        real_centroids = nearest_centroid(real[train_idx], labels[train_idx], num_labels)
        baseline = accuracy(real_centroids, real[held_idx], labels[held_idx])
        tstr = tstr_score(generated, gen_labels, real[held_idx], labels[held_idx], num_labels)
        real_seqs = [seq.subsample(TIMESTEPS) for _, seq in examples]
        gen_seqs = [SkeletonSequence.from_flat(x.reshape(TIMESTEPS, FLAT_DIM)) for x in generated]

        report = EvaluationReport(
            tstr=tstr,
            real_baseline=baseline,
            centroid_accuracy=accuracy(real_centroids, generated, gen_labels),
            per_class=per_class_accuracy(real_centroids, generated, gen_labels, agent.label_names),
            bone_length_drift=bone_length_drift(
                trajectory_stats(gen_seqs), trajectory_stats(real_seqs)
            ),
            diversity_ratio=diversity_ratio(generated, gen_labels, real, labels, num_labels),
        )
        logger.info(
            f"Trajectory evaluation: tstr={report.tstr:.3f} baseline={report.real_baseline:.3f} "
            f"centroid={report.centroid_accuracy:.3f} diversity={report.diversity_ratio:.3f}"
        )
        return report

    def evaluate_frames(
        self, agent: "CompositorAgent", manifest: "ClipManifest", max_frames: int = 64
    ) -> EvaluationReport:
        """Held-out background MAE and regional L1 of a frame compositor."""
        data = agent.dataset(manifest)
        _, held = data.split(agent.config.holdout_fraction, derive_rng(agent.seed, "frames.split"))
        if not held:
            logger.warning("No held-out clips; scoring frame metrics on training frames")
            held = data.targets
        rng = derive_rng(self.seed, "eval.frames")
        chosen = rng.choice(len(held), size=min(max_frames, len(held)), replace=False)
        refs = [held[i] for i in sorted(chosen.tolist())]
        maes: List[float] = []
        regional: List[float] = []
        for start in range(0, len(refs), 8):
            part = refs[start : start + 8]
            metrics = agent.evaluate(data.batch(part, rng))
            if not np.isnan(metrics["background_mae"]):
                maes.append(metrics["background_mae"])
            regional.extend([metrics["regional"]] * len(part))
        report = EvaluationReport(
            background_mae=float(np.mean(maes)) if maes else None,
            regional_l1=float(np.mean(regional)),
        )
        logger.info(
            f"Frame evaluation over {len(refs)} held-out frames: "
            f"background_mae={report.background_mae} regional_l1={report.regional_l1:.4f}"
        )
        return report
