"""Evaluation harness: ROC/AUC over labeled descriptor pairs, the
rotation-variation metric, localization counting, and per-stage timing.

The rotation-variation score of a descriptor pipeline is the feature
distance between a segment and its yaw-rotated copy, normalized by the mean
cross-segment feature distance of the evaluation set; lower is more
rotation-robust.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, SingleClass, TooFewSegments
from .geometry import Segment, yaw_matrix
from .io import MATCH, NON_MATCH, SegmentMap
from .matching import feature_distance
from .pipeline import PipelineConfig, localize, resolve_model
from .validation import readonly

ROTATION_ANGLES_DEG = tuple(range(0, 361, 10))


# --- ROC ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RocCurve:
    """Exact ROC: one point per distinct threshold, ties grouped."""

    false_positive_rate: np.ndarray
    true_positive_rate: np.ndarray
    thresholds: np.ndarray
    auc: float

    def __post_init__(self):
        for name in ("false_positive_rate", "true_positive_rate", "thresholds"):
            object.__setattr__(self, name, readonly(np.asarray(getattr(self, name), dtype=np.float64)))

    @property
    def points(self) -> np.ndarray:
        """(n, 2) array of (false positive rate, true positive rate) points."""
        return np.column_stack([self.false_positive_rate, self.true_positive_rate])


def _as_bool_labels(labels) -> np.ndarray:
    out = np.empty(len(labels), dtype=bool)
    for i, label in enumerate(labels):
        if isinstance(label, str):
            if label == MATCH:
                out[i] = True
            elif label == NON_MATCH:
                out[i] = False
            else:
                raise InvalidArgument(f"unknown label {label!r}")
        else:
            out[i] = bool(label)
    return out


def roc_auc(scores, labels) -> RocCurve:
    """ROC by sweeping every distinct score threshold; AUC by trapezoid.

    Scores must be oriented so higher means more likely to match (negate
    distances before calling). Equal scores are grouped into one threshold,
    which makes the AUC equal the tie-aware pairwise-ranking statistic.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    truth = _as_bool_labels(labels)
    if scores.shape[0] != truth.shape[0]:
        raise InvalidArgument("scores and labels must have equal length")
    n_pos = int(truth.sum())
    n_neg = truth.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both match and non-match examples")

    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_truth = truth[order]
    # one ROC point per distinct score: the last row of each tie group
    boundary = np.r_[np.flatnonzero(np.diff(sorted_scores)), sorted_scores.shape[0] - 1]
    tp = np.cumsum(sorted_truth)[boundary]
    fp = np.cumsum(~sorted_truth)[boundary]

    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(fpr, tpr, sorted_scores[boundary], auc)


# --- rotation variation -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class RotationDeltaReport:
    angles_deg: np.ndarray
    mean_delta: np.ndarray     # (n_angles,)
    per_segment: np.ndarray    # (n_segments, n_angles)
    normalization: float


def _rotate_about_centroid(points: np.ndarray, angle_deg: float) -> np.ndarray:
    center = points.mean(axis=0)
    return (points - center) @ yaw_matrix(np.deg2rad(angle_deg)).T + center


def rotation_delta(describe_fn, segments, angles_deg=ROTATION_ANGLES_DEG) -> RotationDeltaReport:
    """Normalized feature distance between each segment and its rotated copy.

    The normalization is the mean feature distance over all distinct
    unordered pairs of the (unrotated) segment set, which is why at least
    two segments are required.
    """
    segments = list(segments)
    if len(segments) < 2:
        raise TooFewSegments("need >= 2 segments to normalize rotation deltas")
    references = [describe_fn(seg) for seg in segments]

    pair_distances = [
        feature_distance(references[i], references[j])
        for i in range(len(references))
        for j in range(i + 1, len(references))
    ]
    normalization = float(np.mean(pair_distances))
    if normalization <= 0.0:
        raise InvalidArgument("all segments describe identically; normalization is zero")

    angles = np.asarray(list(angles_deg), dtype=np.float64)
    per_segment = np.empty((len(segments), angles.shape[0]))
    for i, (segment, reference) in enumerate(zip(segments, references)):
        for j, angle in enumerate(angles):
            rotated = Segment(_rotate_about_centroid(segment.points, float(angle)),
                              source_cloud=segment.source_cloud)
            per_segment[i, j] = feature_distance(describe_fn(rotated), reference) / normalization
    return RotationDeltaReport(angles, per_segment.mean(axis=0), per_segment, normalization)


# --- localization runs ------------------------------------------------------

@dataclass(frozen=True)
class LocalizationRunResult:
    count: int
    poses: tuple            # PoseEstimate | None per input cloud
    results: tuple          # full LocalizationResult per input cloud


def localization_run(live_clouds, segment_map: SegmentMap, config: PipelineConfig,
                     model=None) -> LocalizationRunResult:
    """Run the pipeline over a sequence of clouds and count accepted poses."""
    if model is None:
        model = resolve_model(config)
    results = tuple(localize(cloud, segment_map, config, model) for cloud in live_clouds)
    poses = tuple(r.pose for r in results)
    return LocalizationRunResult(sum(p is not None for p in poses), poses, results)


# --- timing -----------------------------------------------------------------

STAGES = ("segmentation", "preprocessing", "descriptor", "matching", "pruning", "pose")


@dataclass(frozen=True)
class StageTimings:
    """Mean per-query stage times in milliseconds (median over repeats)."""

    segmentation_ms: float
    preprocessing_ms: float
    descriptor_ms: float
    matching_ms: float
    pruning_ms: float
    pose_ms: float
    overhead_ms: float
    total_ms: float

    def rows(self):
        return [
            ("segmentation_ms", self.segmentation_ms),
            ("preprocessing_ms", self.preprocessing_ms),
            ("descriptor_ms", self.descriptor_ms),
            ("matching_ms", self.matching_ms),
            ("pruning_ms", self.pruning_ms),
            ("pose_ms", self.pose_ms),
            ("overhead_ms", self.overhead_ms),
            ("total_ms", self.total_ms),
        ]


def timing_bench(clouds, segment_map: SegmentMap, config: PipelineConfig,
                 thread_mode: str = "multi_core", repeats: int = 20, warmup: int = 3,
                 model=None) -> StageTimings:
    """Median-of-means stage timing over full localization queries.

    ``single_core`` pins pipeline parallelism to one worker; ``multi_core``
    uses the configured thread count. Outputs are identical either way, only
    the times differ.
    """
    if thread_mode not in ("single_core", "multi_core"):
        raise InvalidArgument(f"thread_mode must be 'single_core' or 'multi_core', got {thread_mode!r}")
    if repeats < 1:
        raise InvalidArgument("repeats must be >= 1")
    clouds = list(clouds)
    if not clouds:
        raise InvalidArgument("need at least one cloud to benchmark")
    run_config = config.with_threads(1) if thread_mode == "single_core" else config
    if model is None:
        model = resolve_model(run_config)

    for i in range(warmup):
        localize(clouds[i % len(clouds)], segment_map, run_config, model)

    per_repeat = {stage: [] for stage in STAGES}
    per_repeat["total"] = []
    for _ in range(repeats):
        sums = {stage: 0.0 for stage in (*STAGES, "total")}
        for cloud in clouds:
            timings: dict = {}
            start = time.perf_counter()
            localize(cloud, segment_map, run_config, model, timings=timings)
            wall = time.perf_counter() - start
            for stage in STAGES:
                sums[stage] += timings.get(stage, 0.0)
            sums["total"] += wall
        for stage, total in sums.items():
            per_repeat[stage].append(total / len(clouds))

    medians = {stage: float(np.median(values) * 1e3) for stage, values in per_repeat.items()}
    stage_sum = sum(medians[stage] for stage in STAGES)
    return StageTimings(
        segmentation_ms=medians["segmentation"],
        preprocessing_ms=medians["preprocessing"],
        descriptor_ms=medians["descriptor"],
        matching_ms=medians["matching"],
        pruning_ms=medians["pruning"],
        pose_ms=medians["pose"],
        overhead_ms=medians["total"] - stage_sum,
        total_ms=medians["total"],
    )


# --- report emitters ---------------------------------------------------------

def write_roc_csv(curve: RocCurve, path) -> None:
    """Two leading columns = gnuplot-ready (fpr, tpr) point dump."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["false_positive_rate", "true_positive_rate", "threshold"])
        for fpr, tpr, thr in zip(curve.false_positive_rate[1:], curve.true_positive_rate[1:], curve.thresholds):
            writer.writerow([repr(float(fpr)), repr(float(tpr)), repr(float(thr))])


def write_delta_csv(reports: dict, path) -> None:
    """One angle column plus one mean-delta column per named variant."""
    names = list(reports)
    angles = reports[names[0]].angles_deg
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["angle_deg", *[f"delta_{name}" for name in names]])
        for j, angle in enumerate(angles):
            writer.writerow([repr(float(angle)), *[repr(float(reports[n].mean_delta[j])) for n in names]])


def write_rows_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for name, value in rows:
            writer.writerow([name, value])
