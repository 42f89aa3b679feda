"""Core geometric value types: point clouds, segments, and SE(3) transforms.

Everything here is an immutable value (arrays are frozen on construction),
so instances can be shared between threads without synchronization.
Coordinates are float64 meters throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, InvalidArgument
from .validation import as_points, as_vector3, readonly

ROTATION_TOL = 1e-6


def centroid(points) -> np.ndarray:
    """Component-wise arithmetic mean of a non-empty point set."""
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise EmptyInput("centroid of an empty point set is undefined")
    return pts.mean(axis=0)


def yaw_matrix(angle_rad: float) -> np.ndarray:
    """Rotation about +z by ``angle_rad`` (right-handed)."""
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """SE(3) pose: proper rotation matrix plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        if rot.shape != (3, 3):
            raise InvalidArgument(f"rotation must be 3x3, got {rot.shape}")
        if not np.isfinite(rot).all():
            raise InvalidArgument("rotation contains NaN or Inf")
        if not np.allclose(rot @ rot.T, np.eye(3), atol=ROTATION_TOL):
            raise InvalidArgument("rotation is not orthonormal")
        if not np.isclose(np.linalg.det(rot), 1.0, atol=ROTATION_TOL):
            raise InvalidArgument("rotation must have determinant +1")
        object.__setattr__(self, "rotation", readonly(rot))
        object.__setattr__(self, "translation", readonly(as_vector3(self.translation, name="translation")))

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_yaw(cls, angle_rad: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        return cls(yaw_matrix(angle_rad), translation)

    @classmethod
    def from_quaternion(cls, quaternion, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """Build from a (w, x, y, z) quaternion; any nonzero norm accepted.

        Quaternions appear only at I/O boundaries; internally rotations stay
        matrices (what the alignment solver and consensus estimators produce).
        """
        q = np.asarray(quaternion, dtype=np.float64).reshape(4)
        norm = np.linalg.norm(q)
        if norm <= 0 or not np.isfinite(norm):
            raise InvalidArgument("quaternion must have nonzero finite norm")
        w, x, y, z = q / norm
        rotation = np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])
        return cls(rotation, translation)

    def to_quaternion(self) -> np.ndarray:
        """Rotation as a unit (w, x, y, z) quaternion with w >= 0."""
        m = self.rotation
        w = 0.5 * np.sqrt(max(0.0, 1.0 + m[0, 0] + m[1, 1] + m[2, 2]))
        if w > 1e-8:
            q = np.array([w,
                          (m[2, 1] - m[1, 2]) / (4 * w),
                          (m[0, 2] - m[2, 0]) / (4 * w),
                          (m[1, 0] - m[0, 1]) / (4 * w)])
        else:
            # w ~ 0: rotation near pi; recover the dominant axis component
            x = 0.5 * np.sqrt(max(0.0, 1.0 + m[0, 0] - m[1, 1] - m[2, 2]))
            if x > 1e-8:
                q = np.array([(m[2, 1] - m[1, 2]) / (4 * x), x,
                              (m[0, 1] + m[1, 0]) / (4 * x),
                              (m[0, 2] + m[2, 0]) / (4 * x)])
            else:
                y = 0.5 * np.sqrt(max(0.0, 1.0 - m[0, 0] + m[1, 1] - m[2, 2]))
                if y > 1e-8:
                    q = np.array([(m[0, 2] - m[2, 0]) / (4 * y),
                                  (m[0, 1] + m[1, 0]) / (4 * y), y,
                                  (m[1, 2] + m[2, 1]) / (4 * y)])
                else:
                    z = 0.5 * np.sqrt(max(0.0, 1.0 - m[0, 0] - m[1, 1] + m[2, 2]))
                    q = np.array([(m[1, 0] - m[0, 1]) / (4 * z),
                                  (m[0, 2] + m[2, 0]) / (4 * z),
                                  (m[1, 2] + m[2, 1]) / (4 * z), z])
        if q[0] < 0:
            q = -q
        return q / np.linalg.norm(q)

    def apply(self, points) -> np.ndarray:
        """Map each point p to R @ p + t. Point order is preserved."""
        pts = as_points(points)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self ∘ other: the transform applying ``other`` first."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def inverse(self) -> "RigidTransform":
        rot_inv = self.rotation.T
        return RigidTransform(rot_inv, -rot_inv @ self.translation)

    def rotation_angle(self) -> float:
        """Rotation magnitude in radians (geodesic distance to identity)."""
        cos_theta = (np.trace(self.rotation) - 1.0) / 2.0
        return float(np.arccos(np.clip(cos_theta, -1.0, 1.0)))

    def is_close(self, other: "RigidTransform", rot_tol: float = 1e-9, trans_tol: float = 1e-9) -> bool:
        delta = self.inverse().compose(other)
        return delta.rotation_angle() <= rot_tol and float(np.linalg.norm(delta.translation)) <= trans_tol


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Unordered set of 3D points; the raw sensor unit.

    Point order carries no semantic meaning: operations must be tolerant to
    permutation unless documented otherwise.
    """

    points: np.ndarray
    frame_id: str = ""
    timestamp: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", readonly(as_points(self.points)))

    def __len__(self) -> int:
        return self.points.shape[0]

    def transform(self, t: RigidTransform) -> "PointCloud":
        return PointCloud(t.apply(self.points), frame_id=self.frame_id, timestamp=self.timestamp)


@dataclass(frozen=True, eq=False)
class Segment:
    """A cluster of LIDAR points: the unit of description and matching."""

    points: np.ndarray
    source_cloud: str = ""
    centroid: np.ndarray = field(init=False)

    def __post_init__(self):
        pts = as_points(self.points, name="segment points", allow_empty=False)
        object.__setattr__(self, "points", readonly(pts))
        object.__setattr__(self, "centroid", readonly(pts.mean(axis=0)))

    def __len__(self) -> int:
        return self.points.shape[0]

    def transform(self, t: RigidTransform) -> "Segment":
        return Segment(t.apply(self.points), source_cloud=self.source_cloud)


def apply_transform(t: RigidTransform, cloud: PointCloud) -> PointCloud:
    """Transform every point of a cloud; order preserved."""
    return cloud.transform(t)
