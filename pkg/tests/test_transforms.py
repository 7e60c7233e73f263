"""Tests for limb warps and homographies."""
import numpy as np
import pytest

from src.skeleton import transforms
from src.skeleton.raster import erode
from src.skeleton.skeleton import LimbSet, Skeleton, SkeletonSequence
from src.skeleton.transforms import (
    Homography,
    apply_homography,
    limb_transform,
    sample_homography,
    similarity_from_segments,
    transform_points,
    warp_limb_patch,
)
from src.utils.errors import DegenerateHomographyError, GeometryError, ShapeMismatchError
from src.utils.rng import derive_rng

R_UPPER_ARM = LimbSet.coco_body()[4]


def gradient_image(size):
    """Three-channel image whose value grows linearly with the column."""
    cols = np.arange(size, dtype=np.float32) / size
    return np.repeat(np.tile(cols, (size, 1))[..., None], 3, axis=-1)


class TestSimilarity:
    """Test per-limb similarity transforms."""

    def test_maps_endpoints(self, rng):
        """Test a -> a2 and b -> b2."""
        a, b, a2, b2 = rng.uniform(size=(4, 2))
        affine = similarity_from_segments(a, b, a2, b2)
        np.testing.assert_allclose(transform_points(affine, np.stack([a, b])), [a2, b2], atol=1e-12)

    def test_preserves_angles(self, rng):
        """Test the linear part is a scaled rotation."""
        a, b, a2, b2 = rng.uniform(size=(4, 2))
        linear = similarity_from_segments(a, b, a2, b2)[:, :2]
        gram = linear.T @ linear
        assert gram[0, 1] == pytest.approx(0.0, abs=1e-12)
        assert gram[0, 0] == pytest.approx(gram[1, 1])

    def test_zero_length_source(self):
        """Test a collapsed source limb."""
        p = np.array([0.5, 0.5])
        with pytest.raises(GeometryError):
            similarity_from_segments(p, p, p, p + 0.1)

    def test_invisible_endpoint(self, standing):
        """Test limbs with an invisible endpoint cannot be transformed."""
        visible = np.ones(18, dtype=bool)
        visible[3] = False
        hidden = Skeleton(standing.joints, visible)
        with pytest.raises(GeometryError, match="target"):
            limb_transform(standing, hidden, R_UPPER_ARM)


class TestWarpLimbPatch:
    """Test warping a limb's pixels onto a target pose."""

    def test_identity_pose_copies_pixels(self, standing, rng):
        """Test the same pose at the same size reproduces the masked pixels."""
        image = rng.random((32, 32, 3)).astype(np.float32)
        patch, mask = warp_limb_patch(image, standing, standing, R_UPPER_ARM, (32, 32))
        assert mask.any()
        np.testing.assert_allclose(patch[mask], image[mask], atol=1e-6)
        assert patch[~mask].sum() == 0.0

    def test_translation_shifts_content(self):
        """Test moving the limb by 4 px samples the source 4 px to the left."""
        image = gradient_image(32)
        joints = np.zeros((18, 2))
        joints[2], joints[3] = [0.4, 0.5], [0.6, 0.5]
        src = Skeleton(joints)
        dst = Skeleton(joints + [4.0 / 32.0, 0.0])
        patch, mask = warp_limb_patch(image, src, dst, R_UPPER_ARM, (32, 32))
        expected = (np.arange(32) - 4.0) / 32.0
        cols = np.nonzero(mask)[1]
        np.testing.assert_allclose(patch[mask][:, 0], expected[cols], atol=1e-4)

    def test_inverse_warp_restores_patch(self):
        """Test warping onto a new pose and back reproduces the capsule interior."""
        ys, xs = np.mgrid[0:96, 0:96].astype(np.float32)
        texture = 0.5 + 0.25 * np.sin(xs / 5.0) + 0.2 * np.cos(ys / 7.0)
        image = np.stack([texture, 1.0 - texture, 0.5 * texture], axis=-1)
        src_joints, dst_joints = np.zeros((18, 2)), np.zeros((18, 2))
        src_joints[2], src_joints[3] = [0.3, 0.4], [0.6, 0.5]
        dst_joints[2], dst_joints[3] = [0.4, 0.3], [0.55, 0.7]
        src, dst = Skeleton(src_joints), Skeleton(dst_joints)

        patch, _ = warp_limb_patch(image, src, dst, R_UPPER_ARM, (96, 96))
        restored, mask = warp_limb_patch(patch, dst, src, R_UPPER_ARM, (96, 96))
        interior = erode(mask, 2)
        assert interior.sum() > 100
        assert np.abs(restored[interior] - image[interior]).mean() < 0.05

    def test_output_size(self, standing, rng):
        """Test the patch takes the requested size."""
        image = rng.random((16, 24, 3)).astype(np.float32)
        patch, mask = warp_limb_patch(image, standing, standing, R_UPPER_ARM, (20, 10))
        assert patch.shape == (20, 10, 3)
        assert mask.shape == (20, 10)


class TestHomography:
    """Test projective transforms."""

    def test_identity(self, rng):
        """Test the identity maps points to themselves."""
        pts = rng.uniform(size=(10, 2))
        np.testing.assert_allclose(Homography.identity().apply_points(pts), pts)
        assert Homography.identity().is_identity()

    def test_singular(self):
        """Test singular matrices are rejected."""
        with pytest.raises(GeometryError):
            Homography(np.zeros((3, 3)))

    def test_wrong_shape(self):
        """Test non-3x3 matrices are rejected."""
        with pytest.raises(ShapeMismatchError):
            Homography(np.eye(2))

    def test_point_at_infinity(self):
        """Test a point sent to the line at infinity."""
        h = Homography(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 1.0]]))
        with pytest.raises(GeometryError):
            h.apply_points(np.array([[1.0, 0.3]]))

    def test_apply_keeps_invisible_at_origin(self, standing):
        """Test invisible joints are left at (0, 0) and visibility is unchanged."""
        visible = np.ones(18, dtype=bool)
        visible[[0, 9]] = False
        seq = SkeletonSequence([Skeleton(standing.joints, visible)] * 3)
        shift = np.array([[1.0, 0.0, 0.1], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        out = apply_homography(seq, shift)
        for sk in out:
            np.testing.assert_array_equal(sk.joints[[0, 9]], 0.0)
            np.testing.assert_array_equal(sk.visible, visible)
            np.testing.assert_allclose(sk.joints[1], standing.joints[1] + [0.1, 0.0])

    def test_keeps_collinear_points_collinear(self, rng):
        """Test points on a line map to points on a line."""
        for i in range(200):
            h = sample_homography(derive_rng(1, "augment.homography", i), 0.15)
            p, q = rng.uniform(size=(2, 2))
            t = rng.uniform(-0.5, 1.5)
            a, b, c = h.apply_points(np.stack([p, q, p + t * (q - p)]))
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            assert abs(cross) < 1e-6

    def test_to_list(self):
        """Test serialization to nested lists."""
        assert Homography.identity().to_list() == np.eye(3).tolist()


class TestSampleHomography:
    """Test random homography sampling."""

    def test_zero_jitter_is_identity(self, rng):
        """Test jitter 0 gives exactly the identity."""
        assert sample_homography(rng, 0.0).is_identity()

    @pytest.mark.parametrize("jitter", [-0.01, 0.26])
    def test_jitter_range(self, rng, jitter):
        """Test jitter outside [0, 0.25] is rejected."""
        with pytest.raises(ValueError):
            sample_homography(rng, jitter)

    def test_transformed_joints_stay_bounded(self, standing, rng):
        """Test 10^4 sampled homographies keep in-frame joints inside [-0.2, 1.2]."""
        scattered = Skeleton(rng.uniform(size=(18, 2)))
        seq = SkeletonSequence([standing, scattered])
        for i in range(10_000):
            h = sample_homography(derive_rng(0, "augment.homography", i), 0.15)
            for sk in apply_homography(seq, h):
                assert sk.joints.min() >= -0.2 and sk.joints.max() <= 1.2

    def test_deterministic(self):
        """Test the same stream gives the same homography."""
        a = sample_homography(derive_rng(3, "augment.homography", 1), 0.1)
        b = sample_homography(derive_rng(3, "augment.homography", 1), 0.1)
        assert np.array_equal(a.matrix, b.matrix)

    def test_gives_up_after_repeated_degenerates(self, rng, mocker):
        """Test a degenerate sample on every attempt raises."""
        check = mocker.patch.object(transforms, "_is_convex", return_value=False)
        with pytest.raises(DegenerateHomographyError):
            sample_homography(rng, 0.1)
        assert check.call_count == transforms.MAX_HOMOGRAPHY_ATTEMPTS
