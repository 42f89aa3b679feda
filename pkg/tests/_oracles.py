"""Independent brute-force oracles the tests check the library against.

These deliberately re-derive results from first principles (full pairwise
scans, exhaustive recomputation, union-find) and share no code with the
implementations they verify.
"""

from __future__ import annotations

import math

import numpy as np


def summation_centroid(points) -> np.ndarray:
    """Centroid via an explicit per-coordinate Python summation loop."""
    sums = [0.0, 0.0, 0.0]
    count = 0
    for p in points:
        for c in range(3):
            sums[c] += float(p[c])
        count += 1
    return np.array([s / count for s in sums])


def brute_force_fps(points, m: int, seed_index: int) -> list[int]:
    """Exhaustive greedy max-min: recompute all pairwise distances per step.

    At every step, for every unselected candidate, its distance to the
    nearest selected point is recomputed from scratch (O(m * n^2) total);
    the candidate with the largest such distance wins, lowest index first.
    """
    pts = np.asarray(points, dtype=np.float64)
    selected = [seed_index]
    while len(selected) < m:
        best_idx, best_dist = None, -1.0
        for cand in range(pts.shape[0]):
            if cand in selected:
                continue
            nearest = min(
                ((pts[cand, 0] - pts[s, 0]) ** 2
                 + (pts[cand, 1] - pts[s, 1]) ** 2
                 + (pts[cand, 2] - pts[s, 2]) ** 2)
                for s in selected
            )
            if nearest > best_dist:
                best_idx, best_dist = cand, nearest
        selected.append(best_idx)
    return selected


def union_find_clusters(points, tolerance: float) -> set[frozenset]:
    """Connected components of the <= tolerance graph via union-find."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    tol_sq = tolerance * tolerance
    for i in range(n):
        for j in range(i + 1, n):
            if ((pts[i] - pts[j]) ** 2).sum() <= tol_sq:
                ra, rb = find(i), find(j)
                if ra != rb:
                    parent[ra] = rb

    groups: dict[int, set] = {}
    for i in range(n):
        groups.setdefault(find(i), set()).add(i)
    return {frozenset(g) for g in groups.values()}


def knn_bruteforce(queries, index, k: int):
    """k nearest rows by full sort over (distance, id) tuples."""
    queries = np.asarray(queries, dtype=np.float64)
    index = np.asarray(index, dtype=np.float64)
    k = min(k, index.shape[0])
    out = []
    for q in queries:
        ranked = sorted(
            (math.sqrt(float(((q - row) ** 2).sum())), i) for i, row in enumerate(index)
        )
        out.append([i for _, i in ranked[:k]])
    return out


def mann_whitney_auc(scores, labels) -> float:
    """Fraction of correctly ordered (positive, negative) pairs, ties = 1/2."""
    scores = [float(s) for s in scores]
    pos = [s for s, y in zip(scores, labels) if y]
    neg = [s for s, y in zip(scores, labels) if not y]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def covariance_eigen_features(points) -> np.ndarray:
    """Re-derivation of the 7 eigenvalue shape features, kept separate from
    the library implementation: explicit covariance accumulation and a
    symmetric-eigenvalue solve on the accumulated matrix."""
    pts = np.asarray(points, dtype=np.float64)
    mean = summation_centroid(pts)
    cov = np.zeros((3, 3))
    for p in pts:
        d = p - mean
        cov += np.outer(d, d)
    cov /= pts.shape[0]
    lam = sorted(np.linalg.eigvalsh(cov), reverse=True)
    lam = [max(v, 0.0) for v in lam]
    e1, e2, e3 = [v / sum(lam) for v in lam]
    entropy = -sum(e * math.log(e) for e in (e1, e2, e3) if e > 0)
    return np.array([
        (e1 - e2) / e1,
        (e2 - e3) / e1,
        e3 / e1,
        (e1 * e2 * e3) ** (1.0 / 3.0),
        (e1 - e3) / e1,
        entropy,
        e3,
    ])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Random proper rotation (QR of a Gaussian matrix, det fixed to +1)."""
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1.0
    return q
