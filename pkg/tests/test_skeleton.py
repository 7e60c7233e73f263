"""Tests for skeleton records, normalization and limb sets."""
import numpy as np
import pytest

from src.skeleton.skeleton import (
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
from src.utils.errors import GeometryError, ShapeMismatchError


class TestSkeleton:
    """Test the COCO-18 skeleton record."""

    def test_joint_layout(self):
        """Test the fixed COCO joint order."""
        assert NUM_JOINTS == 18
        assert FLAT_DIM == 36
        assert JOINT_NAMES[:2] == ("nose", "neck")
        assert JOINT_NAMES[-1] == "l_ear"

    def test_wrong_joint_count(self):
        """Test anything but 18x2 joints is rejected."""
        with pytest.raises(ShapeMismatchError):
            Skeleton(np.zeros((17, 2)))
        with pytest.raises(ShapeMismatchError):
            Skeleton(np.zeros((18, 2)), np.ones(17, dtype=bool))

    def test_invisible_joints_stored_at_origin(self, rng):
        """Test invisible joints are zeroed."""
        visible = np.ones(NUM_JOINTS, dtype=bool)
        visible[[3, 7]] = False
        sk = Skeleton(rng.uniform(0.1, 0.9, size=(18, 2)), visible)
        np.testing.assert_array_equal(sk.joints[[3, 7]], 0.0)
        assert sk.in_unit_square()

    def test_flat_round_trip(self, rng):
        """Test flattening gives 36 values and unflattening restores the skeleton."""
        sk = Skeleton(rng.uniform(size=(18, 2)))
        flat = sk.flatten()
        assert flat.shape == (36,)
        assert Skeleton.from_flat(flat) == sk

    def test_mean_position_needs_visible_joint(self):
        """Test a fully invisible skeleton has no center."""
        with pytest.raises(GeometryError):
            Skeleton(np.zeros((18, 2)), np.zeros(18, dtype=bool)).mean_position()


class TestSkeletonSequence:
    """Test skeleton sequences."""

    def test_flatten_shape(self, rng):
        """Test T frames flatten to T x 36."""
        seq = SkeletonSequence([Skeleton(rng.uniform(size=(18, 2))) for _ in range(8)])
        assert seq.flatten().shape == (8, 36)
        restored = SkeletonSequence.from_flat(seq.flatten())
        assert all(a == b for a, b in zip(seq, restored))

    def test_empty_sequence(self):
        """Test a sequence needs at least one frame."""
        with pytest.raises(ShapeMismatchError):
            SkeletonSequence([])

    def test_subsample(self, rng):
        """Test uniform subsampling keeps the first and last frames."""
        frames = [Skeleton(np.full((18, 2), t / 20.0)) for t in range(20)]
        sub = SkeletonSequence(frames).subsample(8)
        assert len(sub) == 8
        assert sub[0] == frames[0]
        assert sub[7] == frames[19]

    def test_subsample_repeats_short_clips(self):
        """Test short clips are stretched by repeating frames."""
        frames = [Skeleton(np.full((18, 2), t / 4.0)) for t in range(3)]
        assert len(SkeletonSequence(frames).subsample(8)) == 8

    def test_reversed(self, rng):
        """Test reversal."""
        seq = SkeletonSequence([Skeleton(rng.uniform(size=(18, 2))) for _ in range(3)])
        assert seq.reversed()[0] == seq[2]


class TestNormalize:
    """Test per-axis normalization."""

    def test_unit_dimensions_are_identity(self, rng):
        """Test width = height = 1 leaves joints unchanged."""
        sk = Skeleton(rng.uniform(size=(18, 2)))
        assert normalize(sk, 1, 1) == sk

    def test_center_of_image(self):
        """Test (160, 120) in a 320x240 image maps to (0.5, 0.5)."""
        sk = Skeleton(np.tile([160.0, 120.0], (18, 1)))
        np.testing.assert_allclose(normalize(sk, 320, 240).joints, 0.5)

    def test_round_trip(self, rng):
        """Test denormalize(normalize(sk)) == sk to 1e-6 over random skeletons."""
        for _ in range(100):
            w, h = rng.integers(1, 2000, size=2)
            visible = rng.random(18) > 0.2
            sk = Skeleton(rng.uniform(0, 1, size=(18, 2)) * [w, h], visible)
            back = denormalize(normalize(sk, w, h), w, h)
            assert np.abs(back.joints - sk.joints).max() < 1e-6
            assert np.array_equal(back.visible, sk.visible)

    def test_non_positive_dimensions(self, standing):
        """Test zero or negative sizes are rejected."""
        with pytest.raises(GeometryError):
            normalize(standing, 0, 10)
        with pytest.raises(GeometryError):
            denormalize(standing, 10, -1)

    def test_normalize_sequence(self):
        """Test sequences normalize by their source size."""
        seq = SkeletonSequence([Skeleton(np.tile([32.0, 16.0], (18, 1)))], 64, 32)
        np.testing.assert_allclose(normalize_sequence(seq)[0].joints, 0.5)


class TestLimbSet:
    """Test body-part definitions."""

    def test_default_parts(self):
        """Test the default set has torso, limbs and head (13 parts) in draw order."""
        limbs = LimbSet.coco_body()
        assert len(limbs) == 13
        assert limbs[0].name == "neck-r_shoulder"
        assert limbs[-1].name == "head"
        assert limbs[-1].width_ratio == 0.5

    def test_head_ring(self):
        """Test the head ring adds four segments."""
        assert len(LimbSet.with_head_ring()) == 17
        assert len(LimbSet.named("head_ring")) == 17

    def test_unknown_name(self):
        """Test an unknown limb-set name."""
        with pytest.raises(ValueError):
            LimbSet.named("tail")

    def test_duplicate_pair(self):
        """Test the same joint pair twice is rejected in either order."""
        with pytest.raises(GeometryError):
            LimbSet([Limb(1, 2, 0.25, "a"), Limb(2, 1, 0.25, "b")])

    def test_index_range(self):
        """Test joint indices outside [0, 18) are rejected."""
        with pytest.raises(GeometryError):
            LimbSet([Limb(0, 18, 0.25, "bad")])

    def test_lengths_nan_for_invisible(self, standing):
        """Test limbs with an invisible endpoint have NaN length."""
        visible = np.ones(18, dtype=bool)
        visible[4] = False
        sk = Skeleton(standing.joints, visible)
        lengths = LimbSet.coco_body().lengths(sk)
        names = [limb.name for limb in LimbSet.coco_body()]
        assert np.isnan(lengths[names.index("r_forearm")])
        assert not np.isnan(lengths[names.index("r_upper_arm")])
