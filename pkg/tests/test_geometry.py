import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seglocal.errors import EmptyInput, InvalidArgument
from seglocal.geometry import PointCloud, RigidTransform, Segment, apply_transform, centroid

from ._oracles import random_rotation, summation_centroid


class TestCentroid:
    def test_midpoint_symmetry(self):
        assert np.allclose(centroid([(0, 0, 0), (2, 0, 0)]), (1, 0, 0))

    def test_single_point_identity(self):
        assert np.allclose(centroid([(1, 1, 1)]), (1, 1, 1))

    def test_matches_summation_oracle(self, rng):
        pts = rng.uniform(0, 1, size=(100, 3))
        assert np.allclose(centroid(pts), summation_centroid(pts), atol=1e-9)

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            centroid(np.empty((0, 3)))

    def test_rejects_nan(self):
        with pytest.raises(InvalidArgument):
            centroid([(0.0, np.nan, 0.0)])


class TestApplyTransform:
    def test_identity(self, rng):
        cloud = PointCloud(rng.normal(size=(10, 3)))
        out = apply_transform(RigidTransform.identity(), cloud)
        assert np.array_equal(out.points, cloud.points)

    def test_pure_translation(self):
        cloud = PointCloud([(0.0, 0.0, 0.0)])
        out = apply_transform(RigidTransform(np.eye(3), (1, 2, 3)), cloud)
        assert np.allclose(out.points, [(1, 2, 3)])

    def test_quarter_yaw(self):
        # 90 degree yaw: hand-evaluated rotation matrix sends +x to +y
        out = RigidTransform.from_yaw(np.pi / 2).apply([(1.0, 0.0, 0.0)])
        assert np.allclose(out, [(0.0, 1.0, 0.0)], atol=1e-9)

    def test_preserves_order(self, rng):
        pts = rng.normal(size=(50, 3))
        t = RigidTransform(random_rotation(rng), rng.normal(size=3))
        out = t.apply(pts)
        assert np.allclose(out[::-1], t.apply(pts[::-1]))


class TestRigidTransformGroup:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_inverse_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        t = RigidTransform(random_rotation(rng), rng.uniform(-10, 10, 3))
        pts = rng.normal(size=(20, 3))
        back = t.inverse().apply(t.apply(pts))
        assert np.abs(back - pts).max() < 1e-6

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_centroid_commutes_with_transform(self, seed):
        rng = np.random.default_rng(seed)
        t = RigidTransform(random_rotation(rng), rng.uniform(-10, 10, 3))
        pts = rng.normal(size=(15, 3))
        lhs = centroid(t.apply(pts))
        rhs = t.apply(centroid(pts).reshape(1, 3))[0]
        assert np.abs(lhs - rhs).max() < 1e-6

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_composition_stays_orthonormal(self, seed):
        rng = np.random.default_rng(seed)
        a = RigidTransform(random_rotation(rng), rng.normal(size=3))
        b = RigidTransform(random_rotation(rng), rng.normal(size=3))
        rot = (a @ b).rotation
        assert np.abs(rot @ rot.T - np.eye(3)).max() < 1e-6

    def test_compose_group_law(self, rng):
        a = RigidTransform(random_rotation(rng), rng.normal(size=3))
        b = RigidTransform(random_rotation(rng), rng.normal(size=3))
        pts = rng.normal(size=(8, 3))
        assert np.allclose((a @ b).apply(pts), a.apply(b.apply(pts)), atol=1e-9)

    def test_rejects_improper_rotation(self):
        reflection = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(InvalidArgument):
            RigidTransform(reflection, np.zeros(3))

    def test_rejects_non_orthonormal(self):
        with pytest.raises(InvalidArgument):
            RigidTransform(np.eye(3) * 2.0, np.zeros(3))


class TestQuaternionBoundary:
    def test_identity(self):
        t = RigidTransform.from_quaternion((1.0, 0.0, 0.0, 0.0))
        assert np.abs(t.rotation - np.eye(3)).max() < 1e-12

    def test_quarter_yaw_known_value(self):
        half = np.pi / 4
        t = RigidTransform.from_quaternion((np.cos(half), 0.0, 0.0, np.sin(half)))
        assert np.abs(t.rotation - RigidTransform.from_yaw(np.pi / 2).rotation).max() < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        t = RigidTransform(random_rotation(rng), np.zeros(3))
        back = RigidTransform.from_quaternion(t.to_quaternion())
        assert np.abs(back.rotation - t.rotation).max() < 1e-9

    def test_near_pi_rotation_roundtrip(self):
        t = RigidTransform.from_yaw(np.pi - 1e-12)
        back = RigidTransform.from_quaternion(t.to_quaternion())
        assert np.abs(back.rotation - t.rotation).max() < 1e-6

    def test_unnormalized_accepted(self):
        t = RigidTransform.from_quaternion((2.0, 0.0, 0.0, 0.0), (1.0, 2.0, 3.0))
        assert np.abs(t.rotation - np.eye(3)).max() < 1e-12
        assert np.allclose(t.translation, (1.0, 2.0, 3.0))

    def test_zero_quaternion_rejected(self):
        with pytest.raises(InvalidArgument):
            RigidTransform.from_quaternion((0.0, 0.0, 0.0, 0.0))


class TestValueTypes:
    def test_segment_centroid_cached(self, rng):
        pts = rng.normal(size=(30, 3))
        seg = Segment(pts, source_cloud="c0")
        assert np.abs(seg.centroid - pts.mean(axis=0)).max() < 1e-9

    def test_segment_requires_points(self):
        with pytest.raises(EmptyInput):
            Segment(np.empty((0, 3)))

    def test_cloud_may_be_empty(self):
        assert len(PointCloud(np.empty((0, 3)))) == 0

    def test_arrays_frozen(self, rng):
        cloud = PointCloud(rng.normal(size=(4, 3)))
        with pytest.raises(ValueError):
            cloud.points[0, 0] = 5.0
