"""Match / non-match pair labels from centroid distances.

Two segments label as a match when their centroids sit closer than the match
radius (0.5 m) and as a non-match when farther apart than the non-match
radius (20 m); pairs in the dead zone between the radii get no label.
Distances are 3D Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInput, InvalidRadii

MATCH_RADIUS = 0.5
NON_MATCH_RADIUS = 20.0

MATCH = "match"
NON_MATCH = "non_match"


@dataclass(frozen=True)
class PairLabel:
    segment_a: int
    segment_b: int
    label: str


def generate_pair_labels(segments_a, segments_b, match_radius: float = MATCH_RADIUS,
                         non_match_radius: float = NON_MATCH_RADIUS) -> list[PairLabel]:
    """Label every cross pair whose centroid distance falls outside the dead
    zone; indices refer to positions in the two input sequences."""
    if match_radius >= non_match_radius:
        raise InvalidRadii(f"match radius {match_radius} must be < non-match radius {non_match_radius}")
    segments_a = list(segments_a)
    segments_b = list(segments_b)
    if not segments_a or not segments_b:
        raise EmptyInput("both segment sets must be non-empty")

    centroids_a = np.array([seg.centroid for seg in segments_a])
    centroids_b = np.array([seg.centroid for seg in segments_b])
    diff = centroids_a[:, None, :] - centroids_b[None, :, :]
    distance = np.sqrt((diff ** 2).sum(axis=2))

    labels = []
    for i in range(len(segments_a)):
        for j in range(len(segments_b)):
            if distance[i, j] < match_radius:
                labels.append(PairLabel(i, j, MATCH))
            elif distance[i, j] > non_match_radius:
                labels.append(PairLabel(i, j, NON_MATCH))
    return labels
