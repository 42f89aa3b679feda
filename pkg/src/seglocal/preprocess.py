"""Segment canonicalization ahead of description.

A raw segment is resampled to a fixed 256-point budget, centered, and
optionally PCA-aligned so the network sees a viewpoint-normalized cloud.
PCA alignment, not learning, is what carries the rotation robustness of the
full pipeline: descriptors of a segment and of its yaw-rotated copy agree
because both are mapped to the same canonical frame first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import EmptySegment, InvalidArgument
from .geometry import RigidTransform, Segment, yaw_matrix
from .sampling import fps_sample
from .validation import as_points, readonly

CANONICAL_POINTS = 256
ALIGNMENT_MODES = ("none", "pca2d", "pca3d")

# Principal directions closer in spread than this ratio are treated as tied:
# their orientation would be decided by noise, so we fall back to centering.
EIGENVALUE_TIE_RATIO = 0.99
MOMENT_SIGN_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class CanonicalSegment:
    """Fixed-size, origin-centered segment ready for descriptor inference."""

    points: np.ndarray            # (n, 3), centroid at origin
    alignment: str                # mode actually applied
    original_centroid: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points, name="canonical points", allow_empty=False)
        if self.alignment not in ALIGNMENT_MODES:
            raise InvalidArgument(f"alignment must be one of {ALIGNMENT_MODES}")
        if np.abs(pts.mean(axis=0)).max() > 1e-6:
            raise InvalidArgument("canonical points must be centered at the origin")
        object.__setattr__(self, "points", readonly(pts))
        object.__setattr__(self, "original_centroid", readonly(np.asarray(self.original_centroid, dtype=np.float64)))

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    points: np.ndarray           # centered (and possibly rotated) copy
    transform: RigidTransform    # maps original coords -> aligned coords
    mode_applied: str            # 'pca2d'/'pca3d', or 'none' after fallback
    degenerate: bool


def resample_to_n(segment: Segment | np.ndarray, n: int = CANONICAL_POINTS, rng_seed: int = 0) -> np.ndarray:
    """Return exactly n points drawn from the segment.

    Oversized segments are FPS-downsampled (coverage-preserving, seeded);
    undersized ones keep all originals and append seeded uniform re-draws,
    so the distinct point set never grows beyond the original support.
    """
    pts = segment.points if isinstance(segment, Segment) else as_points(segment)
    if pts.shape[0] == 0:
        raise EmptySegment("cannot resample an empty segment")
    if n < 1:
        raise InvalidArgument(f"target point count must be >= 1, got {n}")
    count = pts.shape[0]
    if count == n:
        return pts.copy()
    if count > n:
        return pts[fps_sample(pts, n, rng_seed)]
    extra = np.random.default_rng(rng_seed).integers(0, count, size=n - count)
    return np.concatenate([pts, pts[extra]], axis=0)


def _fix_sign(direction: np.ndarray, projections: np.ndarray) -> np.ndarray:
    """Disambiguate an axis sign deterministically.

    Primary rule: third moment of the projections must be non-negative.
    When the moment vanishes (symmetric shapes), orient so the projection of
    largest magnitude is positive.
    """
    moment = float((projections ** 3).sum())
    if abs(moment) > MOMENT_SIGN_EPS:
        return -direction if moment < 0 else direction
    extreme = projections[np.argmax(np.abs(projections))]
    return -direction if extreme < 0 else direction


def pca_align(points, mode: str) -> AlignmentResult:
    """Center a point set and rotate it into its PCA frame.

    pca2d rotates about z so the dominant direction of the xy covariance
    lies along +x; pca3d aligns all three covariance eigenvectors with the
    axes in descending eigenvalue order. Near-tied eigenvalues (or too few
    points) degrade gracefully to centering only, with ``degenerate`` set.
    """
    if mode not in ("pca2d", "pca3d"):
        raise InvalidArgument(f"alignment mode must be 'pca2d' or 'pca3d', got {mode!r}")
    pts = as_points(points, allow_empty=False)
    center = pts.mean(axis=0)
    centered = pts - center

    def fallback():
        transform = RigidTransform(np.eye(3), -center)
        return AlignmentResult(centered, transform, "none", True)

    min_points = 3 if mode == "pca2d" else 4
    if pts.shape[0] < min_points:
        return fallback()

    if mode == "pca2d":
        cov = centered[:, :2].T @ centered[:, :2] / pts.shape[0]
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        major, minor = eigenvalues[1], eigenvalues[0]
        if major <= 0 or minor / major > EIGENVALUE_TIE_RATIO:
            return fallback()
        axis = _fix_sign(eigenvectors[:, 1], centered[:, :2] @ eigenvectors[:, 1])
        rotation = yaw_matrix(-np.arctan2(axis[1], axis[0]))
    else:
        cov = centered.T @ centered / pts.shape[0]
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        lam = eigenvalues[::-1]
        if lam[0] <= 0 or lam[1] / lam[0] > EIGENVALUE_TIE_RATIO or (
            lam[1] > 0 and lam[2] / lam[1] > EIGENVALUE_TIE_RATIO
        ):
            return fallback()
        e1 = _fix_sign(eigenvectors[:, 2], centered @ eigenvectors[:, 2])
        e2 = _fix_sign(eigenvectors[:, 1], centered @ eigenvectors[:, 1])
        e3 = np.cross(e1, e2)  # right-handed third axis keeps det = +1
        rotation = np.vstack([e1, e2, e3])

    aligned = centered @ rotation.T
    transform = RigidTransform(rotation, -rotation @ center)
    return AlignmentResult(aligned, transform, mode, False)


def rotation_augment(points, rng_seed: int, max_angle_deg: float = 180.0) -> np.ndarray:
    """Rotate a point set about the vertical axis through its centroid by a
    seeded angle drawn uniformly from [0, max_angle_deg]."""
    if not 0 < max_angle_deg <= 360:
        raise InvalidArgument(f"max_angle_deg must be in (0, 360], got {max_angle_deg}")
    pts = as_points(points, allow_empty=False)
    angle = np.deg2rad(np.random.default_rng(rng_seed).uniform(0.0, max_angle_deg))
    center = pts.mean(axis=0)
    return (pts - center) @ yaw_matrix(angle).T + center


def canonicalize(segment: Segment, alignment: str = "pca2d", n: int = CANONICAL_POINTS,
                 rng_seed: int = 0) -> CanonicalSegment:
    """Resample, center, and align one segment."""
    if alignment not in ALIGNMENT_MODES:
        raise InvalidArgument(f"alignment must be one of {ALIGNMENT_MODES}")
    resampled = resample_to_n(segment, n=n, rng_seed=rng_seed)
    offset = resampled.mean(axis=0)
    if alignment == "none":
        return CanonicalSegment(resampled - offset, "none", offset)
    result = pca_align(resampled, alignment)
    return CanonicalSegment(result.points, result.mode_applied, offset)


class SegmentCanonicalizer(TransformerMixin, BaseEstimator):
    """Transformer turning Segment values into CanonicalSegment values."""

    def __init__(self, alignment="pca2d", n_points=CANONICAL_POINTS, rng_seed=0):
        self.alignment = alignment
        self.n_points = n_points
        self.rng_seed = rng_seed

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> list[CanonicalSegment]:
        return [canonicalize(seg, self.alignment, self.n_points, self.rng_seed) for seg in X]
