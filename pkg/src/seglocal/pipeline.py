"""The full localization pipeline and its estimator-style wrapper.

Building a map is ``fit``: segment the mapping clouds, describe every
segment, persist. Localizing is ``predict``: segment the live cloud,
describe, retrieve feature-space candidates from the map, and robustly
estimate the live-to-map rigid transform from centroid correspondences.
Absence of a pose is a valid answer, not an error.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from .descriptor import (
    Descriptor,
    DescriptorKind,
    DsmModel,
    describe_dsm,
    eigenvalue_descriptor,
    init_model,
    load_model,
)
from .errors import ConfigMismatch, InvalidArgument, TooFewCorrespondences
from .geometry import PointCloud, Segment
from .io import SegmentMap
from .matching import knn_match, quality_prune
from .preprocess import ALIGNMENT_MODES, canonicalize
from .registration import PoseEstimate, prosac_pose, ransac_pose
from .segmentation import SegmentationParams, euclidean_segment

DESCRIPTOR_BACKENDS = ("eigen", "dsm")
ESTIMATORS = ("auto", "ransac", "prosac")


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the pipeline; all seeds explicit for reproducibility."""

    # segmentation
    cluster_tolerance: float = 0.2
    min_points: int = 100
    max_points: int = 15000
    ground_removal: str = "z_threshold"
    z_threshold: float = -1.0
    # preprocessing
    align: str = "pca2d"
    # descriptor backend
    descriptor: str = "eigen"
    model_path: str | None = None
    # matching
    k: int | None = None            # None: per-kind default
    quality_threshold: float | None = None
    # registration
    estimator: str = "auto"
    inlier_radius: float = 0.5
    max_iter: int = 1000
    min_inliers: int = 6
    # reproducibility / parallelism
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.descriptor not in DESCRIPTOR_BACKENDS:
            raise InvalidArgument(f"descriptor must be one of {DESCRIPTOR_BACKENDS}")
        if self.align not in ALIGNMENT_MODES:
            raise InvalidArgument(f"align must be one of {ALIGNMENT_MODES}")
        if self.estimator not in ESTIMATORS:
            raise InvalidArgument(f"estimator must be one of {ESTIMATORS}")
        if self.k is not None and self.k < 1:
            raise InvalidArgument("k must be >= 1")
        if self.threads < 1:
            raise InvalidArgument("threads must be >= 1")

    @property
    def descriptor_kind(self) -> DescriptorKind:
        return DescriptorKind.LEARNED16 if self.descriptor == "dsm" else DescriptorKind.EIGEN7

    def segmentation_params(self) -> SegmentationParams:
        return SegmentationParams(
            cluster_tolerance=self.cluster_tolerance,
            min_points=self.min_points,
            max_points=self.max_points,
            ground_removal=self.ground_removal,
            z_threshold=self.z_threshold,
            rng_seed=self.seed,
        )

    def with_threads(self, threads: int) -> "PipelineConfig":
        return replace(self, threads=threads)


def resolve_model(config: PipelineConfig) -> DsmModel | None:
    """The descriptor model the config implies (None for eigen)."""
    if config.descriptor != "dsm":
        return None
    if config.model_path is not None:
        return load_model(config.model_path)
    return init_model(rng_seed=config.seed)


def _parallel_map(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # order-preserving


def describe_segments(segments, config: PipelineConfig, model: DsmModel | None = None,
                      canonicals_out: list | None = None) -> list[Descriptor]:
    """Describe segments with the configured backend.

    The eigenvalue backend consumes raw segments directly (it is exactly
    rotation invariant, so no canonicalization step is needed); the learned
    backend canonicalizes first. Work parallelizes across segments with
    results independent of the thread count.
    """
    segments = list(segments)
    if config.descriptor == "eigen":
        return _parallel_map(eigenvalue_descriptor, segments, config.threads)
    if model is None:
        model = resolve_model(config)
    canonicals = _parallel_map(
        lambda seg: canonicalize(seg, config.align, rng_seed=config.seed), segments, config.threads
    )
    if canonicals_out is not None:
        canonicals_out.extend(canonicals)
    return _parallel_map(lambda c: describe_dsm(c, model), canonicals, config.threads)


def make_describe_fn(config: PipelineConfig, model: DsmModel | None = None):
    """Single-segment describe callable used by the evaluation harness."""
    if config.descriptor == "dsm" and model is None:
        model = resolve_model(config)

    def describe(segment: Segment) -> Descriptor:
        if config.descriptor == "eigen":
            return eigenvalue_descriptor(segment)
        return describe_dsm(canonicalize(segment, config.align, rng_seed=config.seed), model)

    return describe


def build_map(clouds, config: PipelineConfig, model: DsmModel | None = None) -> SegmentMap:
    """Segment and describe every cloud; returns the prior map."""
    if config.descriptor == "dsm" and model is None:
        model = resolve_model(config)
    params = config.segmentation_params()
    entries = []
    for cloud in clouds:
        segments = euclidean_segment(cloud, params)
        descriptors = describe_segments(segments, config, model)
        entries.extend(zip(segments, descriptors))
    return SegmentMap.from_entries(entries, kind=config.descriptor_kind)


@dataclass(frozen=True)
class LocalizationResult:
    pose: PoseEstimate | None
    n_segments: int
    n_correspondences: int
    reason: str = "ok"   # why no pose, when pose is None

    @property
    def localized(self) -> bool:
        return self.pose is not None


def localize(cloud: PointCloud, segment_map: SegmentMap, config: PipelineConfig,
             model: DsmModel | None = None, *, correspondence_filter=None,
             timings: dict | None = None) -> LocalizationResult:
    """Run the full pipeline on one live cloud against a prior map.

    ``correspondence_filter`` is an optional hook filtering the candidate
    correspondences before pose estimation (e.g. geometric consistency).
    ``timings``, when given, receives per-stage wall-clock seconds.
    """
    if config.descriptor_kind is not segment_map.kind:
        raise ConfigMismatch(
            f"pipeline descriptor {config.descriptor_kind.value} != map kind {segment_map.kind.value}"
        )
    if config.descriptor == "dsm" and model is None:
        model = resolve_model(config)

    def record(stage, start):
        now = time.perf_counter()
        if timings is not None:
            timings[stage] = timings.get(stage, 0.0) + (now - start)
        return now

    t = time.perf_counter()
    start_total = t
    segments = euclidean_segment(cloud, config.segmentation_params())
    t = record("segmentation", t)
    if not segments:
        if timings is not None:
            for stage in ("preprocessing", "descriptor", "matching", "pruning", "pose"):
                timings.setdefault(stage, 0.0)
        record("total", start_total)
        return LocalizationResult(None, 0, 0, reason="no-segments")

    if config.descriptor == "eigen":
        t = record("preprocessing", t)  # engineered features skip canonicalization
        descriptors = describe_segments(segments, config, model)
        t = record("descriptor", t)
    else:
        canonicals = _parallel_map(
            lambda seg: canonicalize(seg, config.align, rng_seed=config.seed),
            segments, config.threads,
        )
        t = record("preprocessing", t)
        descriptors = _parallel_map(lambda c: describe_dsm(c, model), canonicals, config.threads)
        t = record("descriptor", t)

    correspondences = knn_match(descriptors, segment_map, k=config.k)
    t = record("matching", t)

    if config.quality_threshold is not None and all(c.quality is not None for c in correspondences):
        correspondences = quality_prune(correspondences, config.quality_threshold)
    if correspondence_filter is not None:
        correspondences = list(correspondence_filter(correspondences))
    t = record("pruning", t)

    live_centroids = np.array([seg.centroid for seg in segments])
    estimator = prosac_pose if config.estimator in ("auto", "prosac") else ransac_pose
    try:
        pose = estimator(
            correspondences, live_centroids, segment_map.centroids,
            inlier_radius=config.inlier_radius, max_iter=config.max_iter,
            min_inliers=config.min_inliers, rng_seed=config.seed,
        )
    except TooFewCorrespondences:
        pose = None
        record("pose", t)
        record("total", start_total)
        return LocalizationResult(None, len(segments), len(correspondences),
                                  reason="too-few-correspondences")
    record("pose", t)
    record("total", start_total)
    reason = "ok" if pose is not None else "no-consensus"
    return LocalizationResult(pose, len(segments), len(correspondences), reason=reason)


class SegmentLocalizer(BaseEstimator):
    """Estimator facade: ``fit`` on mapping clouds (or a prebuilt map),
    ``predict`` a pose for each live cloud."""

    def __init__(self, cluster_tolerance=0.2, min_points=100, max_points=15000,
                 ground_removal="z_threshold", z_threshold=-1.0, align="pca2d",
                 descriptor="eigen", model_path=None, k=None, quality_threshold=None,
                 estimator="auto", inlier_radius=0.5, max_iter=1000, min_inliers=6,
                 seed=0, threads=1):
        self.cluster_tolerance = cluster_tolerance
        self.min_points = min_points
        self.max_points = max_points
        self.ground_removal = ground_removal
        self.z_threshold = z_threshold
        self.align = align
        self.descriptor = descriptor
        self.model_path = model_path
        self.k = k
        self.quality_threshold = quality_threshold
        self.estimator = estimator
        self.inlier_radius = inlier_radius
        self.max_iter = max_iter
        self.min_inliers = min_inliers
        self.seed = seed
        self.threads = threads

    def config(self) -> PipelineConfig:
        return PipelineConfig(
            cluster_tolerance=self.cluster_tolerance, min_points=self.min_points,
            max_points=self.max_points, ground_removal=self.ground_removal,
            z_threshold=self.z_threshold, align=self.align, descriptor=self.descriptor,
            model_path=self.model_path, k=self.k, quality_threshold=self.quality_threshold,
            estimator=self.estimator, inlier_radius=self.inlier_radius,
            max_iter=self.max_iter, min_inliers=self.min_inliers,
            seed=self.seed, threads=self.threads,
        )

    def fit(self, X, y=None):
        """X: a SegmentMap, or an iterable of mapping PointClouds."""
        config = self.config()
        self.model_ = resolve_model(config)
        if isinstance(X, SegmentMap):
            if X.kind is not config.descriptor_kind:
                raise ConfigMismatch(f"map kind {X.kind.value} != configured {config.descriptor_kind.value}")
            self.map_ = X
        else:
            self.map_ = build_map(X, config, self.model_)
        return self

    def localize(self, cloud: PointCloud) -> LocalizationResult:
        return localize(cloud, self.map_, self.config(), self.model_)

    def predict(self, X):
        """PoseEstimate (or None) per cloud; scalar in, scalar out."""
        if isinstance(X, PointCloud):
            return self.localize(X).pose
        return [self.localize(cloud).pose for cloud in X]
