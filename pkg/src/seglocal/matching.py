"""Feature-space candidate retrieval: exact k-nearest-neighbor search over
map descriptors, with optional quality pruning.

Search is exact brute force by default (16- or 7-dim vectors at map scale
make this cheap); a kd-tree accelerator is available and must return the
same neighbors. Distance ties resolve to the lower map id so results do not
depend on map insertion order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from .descriptor import Descriptor, DescriptorKind
from .errors import EmptyMap, InvalidArgument, KindMismatch, MissingQuality
from .io import SegmentMap

# Neighbor counts tuned per descriptor family: learned features need far
# fewer candidates than the engineered ones.
DEFAULT_K = {DescriptorKind.LEARNED16: 25, DescriptorKind.EIGEN7: 200}


@dataclass(frozen=True)
class Correspondence:
    """One candidate live->map segment pairing with its feature distance."""

    live_segment: int
    map_segment: int
    feature_distance: float
    quality: float | None = None


def feature_distance(a: Descriptor, b: Descriptor) -> float:
    """Euclidean distance between two descriptors of the same kind."""
    if a.kind is not b.kind:
        raise KindMismatch(f"cannot compare {a.kind.value} with {b.kind.value}")
    return float(np.linalg.norm(a.values - b.values))


def knn_neighbors(queries: np.ndarray, index: np.ndarray, k: int):
    """Exact k-NN with (distance, id) ordering; returns (dist, idx) arrays."""
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    index = np.atleast_2d(np.asarray(index, dtype=np.float64))
    if queries.shape[1] != index.shape[1]:
        raise KindMismatch(f"query dim {queries.shape[1]} != index dim {index.shape[1]}")
    k = min(k, index.shape[0])
    dist = cdist(queries, index)
    ids = np.arange(index.shape[0])
    out_idx = np.empty((queries.shape[0], k), dtype=np.int64)
    for row in range(queries.shape[0]):
        order = np.lexsort((ids, dist[row]))   # distance first, then map id
        out_idx[row] = order[:k]
    return np.take_along_axis(dist, out_idx, axis=1), out_idx


def knn_match(live: list[Descriptor], segment_map: SegmentMap, k: int | None = None) -> list[Correspondence]:
    """For each live descriptor: its k nearest map descriptors, sorted by
    distance (all of them when the map is smaller than k)."""
    if len(segment_map) == 0:
        raise EmptyMap("cannot match against an empty map")
    if not live:
        return []
    for desc in live:
        if desc.kind is not segment_map.kind:
            raise KindMismatch(f"live descriptor kind {desc.kind.value} != map kind {segment_map.kind.value}")
    if k is None:
        k = DEFAULT_K[segment_map.kind]

    queries = np.vstack([d.values for d in live])
    dist, idx = knn_neighbors(queries, segment_map.descriptors.astype(np.float64), k)
    return [
        Correspondence(i, int(idx[i, j]), float(dist[i, j]), quality=live[i].quality)
        for i in range(len(live))
        for j in range(idx.shape[1])
    ]


def quality_prune(correspondences, threshold: float) -> list[Correspondence]:
    """Keep correspondences with quality >= threshold; order preserved."""
    kept = []
    for corr in correspondences:
        if corr.quality is None:
            raise MissingQuality("correspondence lacks a quality score")
        if corr.quality >= threshold:
            kept.append(corr)
    return kept


class NearestDescriptorIndex(BaseEstimator):
    """Estimator-style exact k-NN index over descriptor rows.

    ``algorithm='kd_tree'`` switches the search structure; results must be
    identical to brute force (both are exact).
    """

    def __init__(self, k=25, algorithm="brute"):
        self.k = k
        self.algorithm = algorithm

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[0] == 0:
            raise EmptyMap("cannot index an empty descriptor set")
        if self.algorithm not in ("brute", "kd_tree"):
            raise InvalidArgument(f"unknown algorithm {self.algorithm!r}")
        self.index_ = X
        self.tree_ = cKDTree(X) if self.algorithm == "kd_tree" else None
        return self

    def kneighbors(self, X, k: int | None = None):
        k = self.k if k is None else k
        if self.algorithm == "brute":
            return knn_neighbors(X, self.index_, k)
        k = min(k, self.index_.shape[0])
        dist, idx = self.tree_.query(np.atleast_2d(np.asarray(X, dtype=np.float64)), k=k)
        dist = np.atleast_2d(dist).reshape(-1, k)
        idx = np.atleast_2d(idx).reshape(-1, k).astype(np.int64)
        return dist, idx
