"""Synthetic-world fixtures: well-separated anisotropic clusters with known
geometry, plus partial transformed views with ground-truth poses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from seglocal.geometry import PointCloud, RigidTransform

# Cluster shape envelope: 3-sigma truncation keeps every cluster inside a
# ~13 m footprint, so an 18 m center separation guarantees > 4 m clearance,
# far above the clustering tolerances the tests use.
SCALE_RANGES = ((1.2, 2.2), (0.5, 1.0), (0.3, 0.8))
MIN_SEPARATION = 18.0


@dataclass(frozen=True)
class SyntheticWorld:
    cloud: PointCloud
    centers: np.ndarray        # (n_clusters, 3)
    cluster_points: list       # list of (n_i, 3) arrays


def make_cluster(rng: np.random.Generator, center, scales, n_points: int) -> np.ndarray:
    """Anisotropic Gaussian blob truncated at 3 sigma."""
    raw = np.clip(rng.normal(size=(n_points, 3)), -3.0, 3.0)
    return center + raw * scales


def make_world(rng: np.random.Generator, n_clusters: int = 60, extent: float = 200.0,
               min_separation: float = MIN_SEPARATION,
               points_range=(200, 400)) -> SyntheticWorld:
    """Scatter distinct-shaped clusters over a square region."""
    centers = []
    attempts = 0
    while len(centers) < n_clusters:
        attempts += 1
        if attempts > 200_000:
            raise RuntimeError("cluster placement did not converge; lower the density")
        cand = np.array([
            rng.uniform(-extent / 2, extent / 2),
            rng.uniform(-extent / 2, extent / 2),
            rng.uniform(0.0, 4.0),
        ])
        if all(np.linalg.norm(cand[:2] - c[:2]) >= min_separation for c in centers):
            centers.append(cand)
    centers = np.array(centers)

    cluster_points = []
    for center in centers:
        scales = np.array([rng.uniform(lo, hi) for lo, hi in SCALE_RANGES])
        n = int(rng.integers(*points_range))
        cluster_points.append(make_cluster(rng, center, scales, n))

    cloud = PointCloud(np.concatenate(cluster_points, axis=0), frame_id="world")
    return SyntheticWorld(cloud, centers, cluster_points)


def view_cluster_indices(world: SyntheticWorld, center_index: int, radius: float,
                         margin: float = 8.0) -> list[int]:
    """Clusters lying entirely inside the view circle (footprint margin)."""
    center = world.centers[center_index]
    return [
        i for i, c in enumerate(world.centers)
        if np.linalg.norm(c[:2] - center[:2]) + margin <= radius
    ]


def partial_view(world: SyntheticWorld, rng: np.random.Generator, *, center_index: int,
                 radius: float = 60.0, dropout: float = 0.3,
                 transform: RigidTransform | None = None) -> tuple[PointCloud, RigidTransform]:
    """A transformed, decimated view of the world around one cluster.

    Only clusters entirely inside the radius are included, so every surviving
    cluster keeps its shape (and centroid) intact. Returns the live cloud and
    the ground-truth live->world pose.
    """
    kept = [world.cluster_points[i] for i in view_cluster_indices(world, center_index, radius)]
    points = np.concatenate(kept, axis=0)

    keep_count = int(round((1.0 - dropout) * points.shape[0]))
    keep_idx = rng.choice(points.shape[0], size=keep_count, replace=False)
    points = points[keep_idx]

    if transform is None:
        angle = rng.uniform(0.0, 2 * np.pi)
        translation = np.array([rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-2, 2)])
        transform = RigidTransform.from_yaw(angle, translation)
    live = PointCloud(transform.apply(points), frame_id="live")
    return live, transform.inverse()


def rich_view_centers(world: SyntheticWorld, radius: float = 60.0, need: int = 8) -> list[int]:
    """Indices usable as view centers: enough fully-contained clusters."""
    return [
        i for i in range(len(world.centers))
        if len(view_cluster_indices(world, i, radius)) >= need
    ]


def decoy_cloud(rng: np.random.Generator, n_clusters: int = 8, extent: float = 140.0) -> PointCloud:
    """Clusters that exist in no map: same scale statistics, fresh geometry."""
    world = make_world(rng, n_clusters=n_clusters, extent=extent)
    return PointCloud(world.cloud.points, frame_id="decoy")
