"""Segment-based global LIDAR localization on the CPU.

A live point cloud is clustered into object-scale segments, each segment is
summarized by a compact descriptor (a down-sampling point-convolution
network, or engineered eigenvalue features), candidate matches against a
prior map are retrieved by exact k-NN in feature space, and a rigid pose is
estimated from centroid correspondences with RANSAC/PROSAC.
"""

from .descriptor import (
    Descriptor,
    DescriptorKind,
    DsmEncoder,
    DsmModel,
    EigenvalueFeatures,
    activation_footprint,
    describe_dsm,
    eigenvalue_descriptor,
    init_model,
    load_model,
    param_count,
    save_model,
)
from .errors import SegLocalError
from .evaluation import (
    RocCurve,
    StageTimings,
    localization_run,
    roc_auc,
    rotation_delta,
    timing_bench,
)
from .geometry import PointCloud, RigidTransform, Segment, apply_transform, centroid
from .io import (
    PairLabel,
    SegmentMap,
    SwatheAccumulator,
    accumulate_swathe,
    generate_pair_labels,
    load_cloud,
    load_map,
    save_map,
)
from .matching import Correspondence, NearestDescriptorIndex, feature_distance, knn_match, quality_prune
from .pipeline import (
    LocalizationResult,
    PipelineConfig,
    SegmentLocalizer,
    build_map,
    localize,
)
from .preprocess import (
    CanonicalSegment,
    SegmentCanonicalizer,
    canonicalize,
    pca_align,
    resample_to_n,
    rotation_augment,
)
from .registration import PoseEstimate, estimate_rigid, prosac_pose, ransac_pose
from .sampling import (
    SampleBatch,
    SampleResult,
    fps_batched,
    fps_benchmark,
    fps_per_segment,
    fps_sample,
    inverse_density_sample,
    random_sample,
)
from .segmentation import EuclideanSegmenter, SegmentationParams, euclidean_segment

__version__ = "0.1.0"

__all__ = [
    "Descriptor",
    "DescriptorKind",
    "DsmEncoder",
    "DsmModel",
    "EigenvalueFeatures",
    "activation_footprint",
    "describe_dsm",
    "eigenvalue_descriptor",
    "init_model",
    "load_model",
    "param_count",
    "save_model",
    "SegLocalError",
    "RocCurve",
    "StageTimings",
    "localization_run",
    "roc_auc",
    "rotation_delta",
    "timing_bench",
    "PointCloud",
    "RigidTransform",
    "Segment",
    "apply_transform",
    "centroid",
    "PairLabel",
    "SegmentMap",
    "SwatheAccumulator",
    "accumulate_swathe",
    "generate_pair_labels",
    "load_cloud",
    "load_map",
    "save_map",
    "Correspondence",
    "NearestDescriptorIndex",
    "feature_distance",
    "knn_match",
    "quality_prune",
    "LocalizationResult",
    "PipelineConfig",
    "SegmentLocalizer",
    "build_map",
    "localize",
    "CanonicalSegment",
    "SegmentCanonicalizer",
    "canonicalize",
    "pca_align",
    "resample_to_n",
    "rotation_augment",
    "PoseEstimate",
    "estimate_rigid",
    "prosac_pose",
    "ransac_pose",
    "SampleBatch",
    "SampleResult",
    "fps_batched",
    "fps_benchmark",
    "fps_per_segment",
    "fps_sample",
    "inverse_density_sample",
    "random_sample",
    "EuclideanSegmenter",
    "SegmentationParams",
    "euclidean_segment",
]
