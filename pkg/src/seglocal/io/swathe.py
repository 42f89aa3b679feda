"""Accumulate push-broom scans into 3D swathes by distance traveled.

Distance is the cumulative path length of translation deltas between
consecutive scan poses (not net displacement); a swathe is emitted whenever
another ``distance`` meters of travel completes, merging every scan of the
window into the frame of the window's first pose. Deltas that straddle a
window boundary count toward the new window: the vehicle traveled them.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonMonotonicTimestamps
from ..geometry import PointCloud, RigidTransform
from ..validation import check_positive

SWATHE_DISTANCE = 30.0


class SwatheAccumulator:
    """Streaming accumulator; feed scans via :meth:`push`."""

    def __init__(self, distance: float = SWATHE_DISTANCE):
        check_positive(distance, name="distance")
        self.distance = distance
        self._window: list[tuple[PointCloud, RigidTransform]] = []
        self._accumulated = 0.0
        self._prev_translation: np.ndarray | None = None
        self._prev_timestamp: float | None = None

    def push(self, cloud: PointCloud, pose: RigidTransform) -> PointCloud | None:
        """Add one scan; returns a merged swathe when the window completes."""
        if cloud.timestamp is not None:
            if self._prev_timestamp is not None and cloud.timestamp < self._prev_timestamp:
                raise NonMonotonicTimestamps(
                    f"timestamp {cloud.timestamp} after {self._prev_timestamp}"
                )
            self._prev_timestamp = cloud.timestamp

        if self._prev_translation is not None:
            self._accumulated += float(np.linalg.norm(pose.translation - self._prev_translation))
        self._prev_translation = pose.translation
        self._window.append((cloud, pose))

        if self._accumulated >= self.distance:
            swathe = self._merge()
            self._window = []
            self._accumulated = 0.0
            return swathe
        return None

    def residual(self) -> PointCloud | None:
        """Scans of the still-open window, merged; None when empty."""
        return self._merge() if self._window else None

    def _merge(self) -> PointCloud:
        first_cloud, first_pose = self._window[0]
        to_first = first_pose.inverse()
        blocks = [to_first.compose(pose).apply(cloud.points) for cloud, pose in self._window]
        return PointCloud(
            np.concatenate(blocks, axis=0),
            frame_id=first_cloud.frame_id,
            timestamp=first_cloud.timestamp,
        )


def accumulate_swathe(scans, distance: float = SWATHE_DISTANCE):
    """Consume (cloud, pose) pairs; returns (complete swathes, residual)."""
    acc = SwatheAccumulator(distance)
    swathes = []
    for cloud, pose in scans:
        merged = acc.push(cloud, pose)
        if merged is not None:
            swathes.append(merged)
    return swathes, acc.residual()
