"""Robust rigid pose estimation from segment-centroid correspondences.

A closed-form least-squares alignment (SVD with a determinant guard, so the
result is always a proper rotation) generates hypotheses inside two robust
estimators: plain RANSAC, and PROSAC, which orders hypothesis sampling by
descriptor quality so good correspondences are tried first. Both share the
same scoring (inlier count, ties by lower mean residual), the same
refit-on-inliers finish, and the same adaptive confidence-based stopping, so
their iteration counts are directly comparable.

No-false-positive property: when fewer than ``min_inliers`` correspondences
are geometrically consistent, both estimators return ``None`` rather than a
spurious pose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, TooFewCorrespondences
from .geometry import RigidTransform
from .validation import as_points

SAMPLE_SIZE = 3  # minimal set for a rigid transform in 3D

DEFAULT_INLIER_RADIUS = 0.5
DEFAULT_MAX_ITER = 1000
DEFAULT_MIN_INLIERS = 6
DEFAULT_CONFIDENCE = 0.999


def estimate_rigid(source, target) -> RigidTransform:
    """Least-squares rigid transform mapping source points onto targets.

    Minimizes sum ||R a_i + t - b_i||^2 subject to det(R) = +1; reflections
    in the unconstrained optimum are folded back to a proper rotation.
    """
    src = as_points(source, name="source")
    dst = as_points(target, name="target")
    if src.shape != dst.shape:
        raise DegenerateConfiguration(f"point sets differ in shape: {src.shape} vs {dst.shape}")
    if src.shape[0] < SAMPLE_SIZE:
        raise DegenerateConfiguration(f"need at least {SAMPLE_SIZE} pairs, got {src.shape[0]}")

    src_center = src.mean(axis=0)
    dst_center = dst.mean(axis=0)
    src_c = src - src_center
    dst_c = dst - dst_center

    spread = np.linalg.svd(src_c, compute_uv=False)
    if spread[1] <= max(1e-9 * spread[0], 1e-12):
        raise DegenerateConfiguration("source points are collinear or coincident")

    u, _, vt = np.linalg.svd(src_c.T @ dst_c)
    rotation = vt.T @ u.T
    if np.linalg.det(rotation) < 0:
        vt[-1, :] *= -1.0
        rotation = vt.T @ u.T
    return RigidTransform(rotation, dst_center - rotation @ src_center)


def residuals(transform: RigidTransform, source: np.ndarray, target: np.ndarray) -> np.ndarray:
    return np.linalg.norm(source @ transform.rotation.T + transform.translation - target, axis=1)


def rms_residual(transform: RigidTransform, source, target) -> float:
    r = residuals(transform, as_points(source), as_points(target))
    return float(np.sqrt((r ** 2).mean()))


@dataclass(frozen=True)
class PoseEstimate:
    transform: RigidTransform
    inliers: tuple
    iterations_used: int
    mean_residual: float


def _required_iterations(inlier_ratio: float, confidence: float) -> float:
    """Iterations needed to hit an all-inlier sample with given confidence."""
    if inlier_ratio <= 0.0:
        return np.inf
    p_good = inlier_ratio ** SAMPLE_SIZE
    if p_good >= 1.0:
        return 1.0
    return np.ceil(np.log(1.0 - confidence) / np.log(1.0 - p_good))


def _consensus_search(correspondences, live_points, map_points, sampler, *, inlier_radius,
                      max_iter, min_inliers, confidence):
    """Shared hypothesize-and-verify loop; ``sampler(t)`` yields sample rows."""
    n = len(correspondences)
    src = live_points
    dst = map_points

    best_count = 0
    best_mean = np.inf
    best_mask = None
    best_transform = None
    required = np.inf
    iterations = 0

    for t in range(1, max_iter + 1):
        if t > required:  # checked up front: hypothesis quality must not gate the stop
            break
        iterations = t
        sample = sampler(t)
        try:
            hypothesis = estimate_rigid(src[sample], dst[sample])
        except DegenerateConfiguration:
            continue
        r = residuals(hypothesis, src, dst)
        mask = r <= inlier_radius
        count = int(mask.sum())
        if count == 0:
            continue
        mean_res = float(r[mask].mean())
        if count > best_count or (count == best_count and mean_res < best_mean):
            best_count, best_mean = count, mean_res
            best_mask, best_transform = mask, hypothesis
            required = _required_iterations(count / n, confidence)

    if best_transform is None or best_count < min_inliers:
        return None

    # Refit on the full consensus set; fall back to the raw hypothesis when
    # the inliers themselves are degenerate.
    try:
        refit = estimate_rigid(src[best_mask], dst[best_mask])
    except DegenerateConfiguration:
        refit = best_transform
    r = residuals(refit, src, dst)
    mask = r <= inlier_radius
    if int(mask.sum()) < min_inliers:
        return None
    inliers = tuple(corr for corr, keep in zip(correspondences, mask) if keep)
    return PoseEstimate(refit, inliers, iterations, float(r[mask].mean()))


def _correspondence_points(correspondences, live_centroids, map_centroids):
    live_centroids = as_points(live_centroids, name="live_centroids")
    map_centroids = as_points(map_centroids, name="map_centroids")
    src = live_centroids[[c.live_segment for c in correspondences]]
    dst = map_centroids[[c.map_segment for c in correspondences]]
    return src, dst


def ransac_pose(correspondences, live_centroids, map_centroids, *,
                inlier_radius: float = DEFAULT_INLIER_RADIUS, max_iter: int = DEFAULT_MAX_ITER,
                min_inliers: int = DEFAULT_MIN_INLIERS, rng_seed: int = 0,
                confidence: float = DEFAULT_CONFIDENCE) -> PoseEstimate | None:
    """Uniform-sampling consensus over centroid correspondences."""
    correspondences = list(correspondences)
    if len(correspondences) < SAMPLE_SIZE:
        raise TooFewCorrespondences(f"need at least {SAMPLE_SIZE} correspondences, got {len(correspondences)}")
    src, dst = _correspondence_points(correspondences, live_centroids, map_centroids)
    rng = np.random.default_rng(rng_seed)
    n = len(correspondences)

    def sampler(_t):
        return rng.choice(n, size=SAMPLE_SIZE, replace=False)

    return _consensus_search(correspondences, src, dst, sampler, inlier_radius=inlier_radius,
                             max_iter=max_iter, min_inliers=min_inliers, confidence=confidence)


def prosac_pose(correspondences, live_centroids, map_centroids, *,
                inlier_radius: float = DEFAULT_INLIER_RADIUS, max_iter: int = DEFAULT_MAX_ITER,
                min_inliers: int = DEFAULT_MIN_INLIERS, rng_seed: int = 0,
                confidence: float = DEFAULT_CONFIDENCE) -> PoseEstimate | None:
    """Progressive consensus: hypothesis sampling grows the candidate pool
    from the highest-quality prefix of the correspondence list.

    Falls back to plain RANSAC when correspondences carry no quality scores.
    Acceptance contract (scoring, min_inliers, refit) is identical to
    :func:`ransac_pose`; only the sampling order differs.
    """
    correspondences = list(correspondences)
    if len(correspondences) < SAMPLE_SIZE:
        raise TooFewCorrespondences(f"need at least {SAMPLE_SIZE} correspondences, got {len(correspondences)}")
    if any(c.quality is None for c in correspondences):
        return ransac_pose(correspondences, live_centroids, map_centroids,
                           inlier_radius=inlier_radius, max_iter=max_iter,
                           min_inliers=min_inliers, rng_seed=rng_seed, confidence=confidence)

    order = sorted(range(len(correspondences)),
                   key=lambda i: (-correspondences[i].quality, i))
    ranked = [correspondences[i] for i in order]
    src, dst = _correspondence_points(ranked, live_centroids, map_centroids)
    rng = np.random.default_rng(rng_seed)
    n = len(ranked)

    # Progressive pool growth (standard schedule): pool size starts at the
    # sample size and widens so that by ``max_iter`` draws it covers the full
    # list, at which point sampling matches plain RANSAC.
    state = {"pool": SAMPLE_SIZE, "t_pool": 1.0, "grow_at": 1.0}
    ratio = 1.0
    for i in range(SAMPLE_SIZE):
        ratio *= (SAMPLE_SIZE - i) / (n - i)
    state["t_pool"] = max_iter * ratio

    def sampler(t):
        if t >= state["grow_at"] and state["pool"] < n:
            t_next = state["t_pool"] * (state["pool"] + 1) / (state["pool"] + 1 - SAMPLE_SIZE)
            state["grow_at"] += np.ceil(t_next - state["t_pool"])
            state["t_pool"] = t_next
            state["pool"] += 1
        pool = state["pool"]
        if t >= state["grow_at"] or pool <= SAMPLE_SIZE:
            return rng.choice(pool, size=SAMPLE_SIZE, replace=False)
        # newest pool member plus a random minimal complement from above it
        rest = rng.choice(pool - 1, size=SAMPLE_SIZE - 1, replace=False)
        return np.concatenate([rest, [pool - 1]])

    return _consensus_search(ranked, src, dst, sampler, inlier_radius=inlier_radius,
                             max_iter=max_iter, min_inliers=min_inliers, confidence=confidence)
