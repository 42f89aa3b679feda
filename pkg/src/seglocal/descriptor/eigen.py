"""Engineered 7-value shape descriptor from covariance eigenvalues.

Exactly invariant to rigid motion (eigenvalues see neither rotation nor
translation), so it needs no trained weights and no canonicalization.
It anchors end-to-end tests and serves as a fallback descriptor backend.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..errors import DegenerateCovariance
from ..geometry import Segment
from ..validation import as_points
from .base import Descriptor, DescriptorKind

FEATURE_NAMES = (
    "linearity",
    "planarity",
    "scattering",
    "omnivariance",
    "anisotropy",
    "eigenentropy",
    "change_of_curvature",
)


def eigenvalue_features(points) -> np.ndarray:
    """The 7 shape features from eigenvalues normalized to sum 1."""
    pts = as_points(points)
    if pts.shape[0] < 3:
        raise DegenerateCovariance(f"need at least 3 points, got {pts.shape[0]}")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / pts.shape[0]
    lam = np.linalg.eigvalsh(cov)[::-1]          # descending
    lam = np.clip(lam, 0.0, None)                # shave numeric negatives
    total = lam.sum()
    if total <= 0.0:
        raise DegenerateCovariance("all points coincide; covariance has rank 0")
    e1, e2, e3 = lam / total

    entropy = 0.0
    for e in (e1, e2, e3):
        if e > 0.0:
            entropy -= e * np.log(e)

    return np.array([
        (e1 - e2) / e1,
        (e2 - e3) / e1,
        e3 / e1,
        (e1 * e2 * e3) ** (1.0 / 3.0),
        (e1 - e3) / e1,
        entropy,
        e3,                                      # λ3 / (λ1+λ2+λ3) with Σλ = 1
    ])


def eigenvalue_descriptor(segment: Segment | np.ndarray) -> Descriptor:
    pts = segment.points if isinstance(segment, Segment) else segment
    return Descriptor(eigenvalue_features(pts), DescriptorKind.EIGEN7)


class EigenvalueFeatures(TransformerMixin, BaseEstimator):
    """Transformer mapping segments to a (n_segments, 7) feature matrix."""

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        return np.vstack([eigenvalue_features(seg.points if isinstance(seg, Segment) else seg) for seg in X])

    def describe(self, segments) -> list[Descriptor]:
        return [eigenvalue_descriptor(seg) for seg in segments]
