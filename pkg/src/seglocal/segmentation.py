"""Euclidean cluster extraction: the shared front end that turns a raw cloud
into object-scale segments.

Clusters are maximal connected components of the "closer than
``cluster_tolerance``" relation, found by flood fill over a voxel-hash grid
with cell size equal to the tolerance (neighbors can then only live in the
27 surrounding cells). Output is identical to a kd-tree implementation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .errors import InvalidArgument
from .geometry import PointCloud, Segment
from .validation import as_points, check_positive

GROUND_REMOVAL_MODES = ("none", "z_threshold", "plane_ransac")

# The defaults below are artifact choices (tolerance in meters); tune per
# sensor. The default z threshold assumes the sensor frame origin sits above
# the ground plane.
DEFAULT_TOLERANCE = 0.2
DEFAULT_MIN_POINTS = 100
DEFAULT_MAX_POINTS = 15000
DEFAULT_Z_THRESHOLD = -1.0


@dataclass(frozen=True)
class SegmentationParams:
    cluster_tolerance: float = DEFAULT_TOLERANCE
    min_points: int = DEFAULT_MIN_POINTS
    max_points: int = DEFAULT_MAX_POINTS
    ground_removal: str = "z_threshold"
    z_threshold: float = DEFAULT_Z_THRESHOLD
    plane_distance: float = 0.2
    plane_iterations: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        check_positive(self.cluster_tolerance, name="cluster_tolerance")
        if not 0 < self.min_points <= self.max_points:
            raise InvalidArgument(
                f"need 0 < min_points <= max_points, got {self.min_points}, {self.max_points}"
            )
        if self.ground_removal not in GROUND_REMOVAL_MODES:
            raise InvalidArgument(f"ground_removal must be one of {GROUND_REMOVAL_MODES}")


def remove_ground(points: np.ndarray, params: SegmentationParams) -> np.ndarray:
    """Indices of the points kept after the configured ground filter."""
    n = points.shape[0]
    if params.ground_removal == "none" or n == 0:
        return np.arange(n)
    if params.ground_removal == "z_threshold":
        return np.flatnonzero(points[:, 2] > params.z_threshold)

    # plane_ransac: drop inliers of the best-supported plane
    rng = np.random.default_rng(params.rng_seed)
    best_inliers = None
    best_count = -1
    for _ in range(params.plane_iterations):
        tri = points[rng.choice(n, size=3, replace=False)]
        normal = np.cross(tri[1] - tri[0], tri[2] - tri[0])
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal /= norm
        dist = np.abs((points - tri[0]) @ normal)
        inliers = dist <= params.plane_distance
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count < 3:
        return np.arange(n)
    return np.flatnonzero(~best_inliers)


def _cluster_labels(points: np.ndarray, tolerance: float) -> np.ndarray:
    """Connected-component label per point under dist <= tolerance."""
    n = points.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels

    cells = np.floor(points / tolerance).astype(np.int64)
    grid: dict[tuple, list] = {}
    for i, key in enumerate(map(tuple, cells)):
        grid.setdefault(key, []).append(i)

    tol_sq = tolerance * tolerance
    offsets = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)]
    current = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = current
        queue = deque([start])
        while queue:
            i = queue.popleft()
            cx, cy, cz = cells[i]
            p = points[i]
            for dx, dy, dz in offsets:
                bucket = grid.get((cx + dx, cy + dy, cz + dz))
                if not bucket:
                    continue
                for j in bucket:
                    if labels[j] >= 0:
                        continue
                    d = points[j] - p
                    if d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= tol_sq:
                        labels[j] = current
                        queue.append(j)
        current += 1
    return labels


def euclidean_segment(cloud: PointCloud, params: SegmentationParams | None = None) -> list[Segment]:
    """Extract segments from a cloud.

    Each returned segment is a maximal tolerance-connected component whose
    size lies in ``[min_points, max_points]``; every returned point belongs
    to exactly one segment. An empty result is informational, not an error.
    """
    params = params or SegmentationParams()
    kept = remove_ground(cloud.points, params)
    pts = cloud.points[kept]
    if pts.shape[0] == 0:
        return []

    labels = _cluster_labels(pts, params.cluster_tolerance)
    segments = []
    for label in range(labels.max() + 1):
        member = np.flatnonzero(labels == label)
        if params.min_points <= member.shape[0] <= params.max_points:
            segments.append(Segment(pts[member], source_cloud=cloud.frame_id))
    return segments


class EuclideanSegmenter(ClusterMixin, BaseEstimator):
    """Clusterer-style wrapper: ``fit_predict(X)`` labels an (N, 3) array.

    Points filtered out (ground, undersized or oversized clusters) get label
    -1, mirroring the noise convention of density-based clusterers.
    """

    def __init__(self, cluster_tolerance=DEFAULT_TOLERANCE, min_points=DEFAULT_MIN_POINTS,
                 max_points=DEFAULT_MAX_POINTS, ground_removal="none",
                 z_threshold=DEFAULT_Z_THRESHOLD, rng_seed=0):
        self.cluster_tolerance = cluster_tolerance
        self.min_points = min_points
        self.max_points = max_points
        self.ground_removal = ground_removal
        self.z_threshold = z_threshold
        self.rng_seed = rng_seed

    def _params(self) -> SegmentationParams:
        return SegmentationParams(
            cluster_tolerance=self.cluster_tolerance,
            min_points=self.min_points,
            max_points=self.max_points,
            ground_removal=self.ground_removal,
            z_threshold=self.z_threshold,
            rng_seed=self.rng_seed,
        )

    def fit(self, X, y=None):
        pts = as_points(X, name="X")
        params = self._params()
        kept = remove_ground(pts, params)
        raw = _cluster_labels(pts[kept], params.cluster_tolerance)

        labels = np.full(pts.shape[0], -1, dtype=np.int64)
        next_label = 0
        for label in range(raw.max() + 1 if raw.size else 0):
            member = np.flatnonzero(raw == label)
            if params.min_points <= member.shape[0] <= params.max_points:
                labels[kept[member]] = next_label
                next_label += 1
        self.labels_ = labels
        self.n_clusters_ = next_label
        return self

    def extract(self, cloud: PointCloud) -> list[Segment]:
        """Domain-typed variant of fit_predict returning Segment values."""
        return euclidean_segment(cloud, self._params())
