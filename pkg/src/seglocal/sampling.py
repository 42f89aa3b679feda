"""Point samplers: farthest-point (per-segment and batched), random, and
inverse-density selection.

Farthest Point Sampling (FPS) greedily picks the point with the largest
distance to its nearest already-selected point, maximizing spatial coverage.
The batched variant runs the same greedy rule on a whole tensor of segments
at once, which is where the CPU speedup comes from; it is required to return
*exactly* the indices the per-segment routine returns for every segment.

To keep that exactness, both paths square-accumulate coordinate differences
in the same order (x, then y, then z) in float64, and both resolve argmax
ties to the lowest index.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BadSampleSize, BadSeed, InvalidArgument, RaggedBatch
from .validation import as_points, readonly


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """A padded tensor of segments: ``data[p, s]`` is point s of segment p.

    Rows at or beyond ``valid_counts[p]`` are padding and are never selected.
    """

    data: np.ndarray            # (P, S, 3) float64
    valid_counts: np.ndarray    # (P,) int64, each in [1, S]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[2] != 3 or data.shape[0] < 1 or data.shape[1] < 1:
            raise InvalidArgument(f"batch data must have shape (P, S, 3) with P,S >= 1, got {data.shape}")
        counts = np.asarray(self.valid_counts, dtype=np.int64).reshape(-1)
        if counts.shape[0] != data.shape[0]:
            raise InvalidArgument("valid_counts length must equal the number of segments")
        if counts.min() < 1 or counts.max() > data.shape[1]:
            raise InvalidArgument("valid_counts entries must lie in [1, S]")
        object.__setattr__(self, "data", readonly(data))
        object.__setattr__(self, "valid_counts", readonly(counts))

    @classmethod
    def from_segments(cls, point_sets) -> "SampleBatch":
        """Pack ragged point sets into one padded batch (zero padding)."""
        arrays = [as_points(p, allow_empty=False) for p in point_sets]
        s_max = max(a.shape[0] for a in arrays)
        data = np.zeros((len(arrays), s_max, 3))
        counts = np.empty(len(arrays), dtype=np.int64)
        for i, a in enumerate(arrays):
            data[i, : a.shape[0]] = a
            counts[i] = a.shape[0]
        return cls(data, counts)


@dataclass(frozen=True, eq=False)
class SampleResult:
    """Per-segment selected indices; column 0 is the seed index."""

    indices: np.ndarray  # (P, M) int64

    def __post_init__(self):
        object.__setattr__(self, "indices", readonly(np.asarray(self.indices, dtype=np.int64)))


def _check_sample_size(m: int, n: int):
    if not 1 <= m <= n:
        raise BadSampleSize(f"sample size {m} not in [1, {n}]")


def fps_per_segment(points, m: int, seed_index: int) -> np.ndarray:
    """Greedy max-min sampling of one segment.

    ``result[0] == seed_index``; each following index maximizes the distance
    to the nearest already-selected point, ties broken by lowest index.
    """
    pts = as_points(points, allow_empty=False)
    n = pts.shape[0]
    _check_sample_size(m, n)
    if not 0 <= seed_index < n:
        raise BadSeed(f"seed index {seed_index} not in [0, {n})")

    indices = np.empty(m, dtype=np.int64)
    indices[0] = seed_index
    # squared distances: monotonically equivalent, no square roots in the loop.
    # Selected slots drop to -1 so duplicated coordinates (distance 0) can
    # never re-select an already-chosen index.
    nearest = ((pts - pts[seed_index]) ** 2).sum(axis=1)
    nearest[seed_index] = -1.0
    for i in range(1, m):
        j = int(np.argmax(nearest))
        indices[i] = j
        np.minimum(nearest, ((pts - pts[j]) ** 2).sum(axis=1), out=nearest)
        nearest[j] = -1.0
    return indices


def fps_sample(points, m: int, rng_seed: int) -> np.ndarray:
    """Convenience wrapper drawing the FPS seed index from a seeded RNG."""
    pts = as_points(points, allow_empty=False)
    seed_index = int(np.random.default_rng(rng_seed).integers(0, pts.shape[0]))
    return fps_per_segment(pts, m, seed_index)


def _fps_chunk(planes: np.ndarray, seeds: np.ndarray, m: int, pad_mask, out: np.ndarray):
    """Serial batched FPS over one chunk of segments.

    ``planes`` is the (3, P, S) coordinate-plane layout: the per-step update
    touches three contiguous (P, S) slabs instead of one strided (P, S, 3)
    block, which roughly halves memory traffic in the hot loop. The update
    accumulates x, y, z squared differences in the same order as the
    per-segment routine, so results agree bit-for-bit.
    """
    _, p_count, s_count = planes.shape
    rows = np.arange(p_count)
    out[:, 0] = seeds
    nearest = np.empty((p_count, s_count))
    dist_new = np.empty((p_count, s_count))
    buf = np.empty((p_count, s_count))
    current = seeds
    for step in range(1, m + 1):
        for c in range(3):
            plane = planes[c]
            np.subtract(plane, plane[rows, current][:, None], out=buf)
            np.multiply(buf, buf, out=buf)
            if c == 0:
                dist_new[:] = buf
            else:
                dist_new += buf
        if step == 1:
            nearest[:] = dist_new
            if pad_mask is not None:
                nearest[pad_mask] = -1.0  # padding can never win argmax
        else:
            np.minimum(nearest, dist_new, out=nearest)
        nearest[rows, current] = -1.0     # nor can selected slots
        if step == m:
            break
        current = np.argmax(nearest, axis=1)  # first max == lowest index
        out[:, step] = current


def fps_batched(batch: SampleBatch, m: int, seed_indices, *, workers: int = 1) -> SampleResult:
    """Batched FPS over all segments of a padded tensor simultaneously.

    For every segment the output indices equal ``fps_per_segment`` run on
    that segment with the same seed, exactly. ``workers`` splits the batch
    across threads along the segment axis; results are identical for any
    worker count.
    """
    p_count, s_count, _ = batch.data.shape
    _check_sample_size(m, s_count)
    min_valid = int(batch.valid_counts.min())
    if m > min_valid:
        raise RaggedBatch(f"sample size {m} exceeds smallest valid count {min_valid}")
    seeds = np.asarray(seed_indices, dtype=np.int64).reshape(-1)
    if seeds.shape[0] != p_count:
        raise BadSeed("need one seed index per segment")
    if (seeds < 0).any() or (seeds >= batch.valid_counts).any():
        raise BadSeed("seed indices must lie within each segment's valid range")

    out = np.empty((p_count, m), dtype=np.int64)
    has_padding = bool((batch.valid_counts < s_count).any())

    def chunk_args(lo, hi):
        planes = np.ascontiguousarray(batch.data[lo:hi].transpose(2, 0, 1))
        mask = None
        if has_padding:
            mask = np.arange(s_count)[None, :] >= batch.valid_counts[lo:hi, None]
        return planes, seeds[lo:hi], m, mask, out[lo:hi]

    if workers <= 1 or p_count < 2 * workers:
        _fps_chunk(*chunk_args(0, p_count))
    else:
        bounds = np.linspace(0, p_count, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_fps_chunk, *chunk_args(lo, hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for f in futures:
                f.result()
    return SampleResult(out)


def random_sample(points, m: int, rng_seed: int) -> np.ndarray:
    """Uniform sample of m distinct indices, reproducible from the seed."""
    pts = as_points(points, allow_empty=False)
    _check_sample_size(m, pts.shape[0])
    rng = np.random.default_rng(rng_seed)
    return np.asarray(rng.choice(pts.shape[0], size=m, replace=False), dtype=np.int64)


def inverse_density_sample(points, m: int, density_radius: float, rng_seed: int) -> np.ndarray:
    """Sample m distinct indices with probability ∝ 1 / (1 + local density).

    Local density of a point is the count of *other* points within
    ``density_radius``; sparse regions are favored.
    """
    pts = as_points(points, allow_empty=False)
    n = pts.shape[0]
    _check_sample_size(m, n)
    if not density_radius > 0:
        raise InvalidArgument("density_radius must be positive")
    diff = pts[:, None, :] - pts[None, :, :]
    within = (diff ** 2).sum(axis=2) <= density_radius ** 2
    neighbor_counts = within.sum(axis=1) - 1  # exclude self
    weights = 1.0 / (1.0 + neighbor_counts)
    rng = np.random.default_rng(rng_seed)
    picked = rng.choice(n, size=m, replace=False, p=weights / weights.sum())
    return np.asarray(picked, dtype=np.int64)


@dataclass(frozen=True)
class FpsBenchmarkReport:
    """Median wall-clock comparison of looped vs batched FPS."""

    segments: int
    points_per_segment: int
    sample_size: int
    repeats: int
    per_segment_ms: float
    batched_ms: float

    @property
    def speedup(self) -> float:
        return self.per_segment_ms / self.batched_ms

    def rows(self):
        return [
            ("segments", self.segments),
            ("points_per_segment", self.points_per_segment),
            ("sample_size", self.sample_size),
            ("repeats", self.repeats),
            ("per_segment_ms", f"{self.per_segment_ms:.3f}"),
            ("batched_ms", f"{self.batched_ms:.3f}"),
            ("speedup", f"{self.speedup:.2f}"),
        ]


def fps_benchmark(p: int, s: int, m: int, repeats: int, *, rng_seed: int = 0,
                  workers: int | None = None) -> FpsBenchmarkReport:
    """Time a naive per-segment FPS loop against the batched implementation."""
    for name, value in (("p", p), ("s", s), ("m", m), ("repeats", repeats)):
        if value < 1:
            raise InvalidArgument(f"{name} must be >= 1, got {value}")
    _check_sample_size(m, s)
    if workers is None:
        workers = os.cpu_count() or 1

    rng = np.random.default_rng(rng_seed)
    data = rng.uniform(-10.0, 10.0, size=(p, s, 3))
    seeds = rng.integers(0, s, size=p)
    batch = SampleBatch(data, np.full(p, s, dtype=np.int64))

    looped_times, batched_times = [], []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for i in range(p):
            fps_per_segment(data[i], m, int(seeds[i]))
        t1 = time.perf_counter()
        fps_batched(batch, m, seeds, workers=workers)
        t2 = time.perf_counter()
        looped_times.append(t1 - t0)
        batched_times.append(t2 - t1)

    return FpsBenchmarkReport(
        segments=p,
        points_per_segment=s,
        sample_size=m,
        repeats=repeats,
        per_segment_ms=float(np.median(looped_times) * 1e3),
        batched_ms=float(np.median(batched_times) * 1e3),
    )
