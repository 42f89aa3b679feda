"""Input validation helpers used at API boundaries.

All geometry enters the library through :func:`as_points`, which pins the
dtype (float64), the shape ``(N, 3)``, and finiteness, so the numerical code
never has to re-check.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInput, InvalidArgument


def as_points(obj, *, name: str = "points", allow_empty: bool = True) -> np.ndarray:
    """Coerce to a float64 ``(N, 3)`` array of finite coordinates."""
    pts = np.asarray(obj, dtype=np.float64)
    if pts.ndim == 1 and pts.size == 0:
        pts = pts.reshape(0, 3)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidArgument(f"{name} must have shape (N, 3), got {pts.shape}")
    if not allow_empty and pts.shape[0] == 0:
        raise EmptyInput(f"{name} must contain at least one point")
    if pts.size and not np.isfinite(pts).all():
        raise InvalidArgument(f"{name} contains NaN or Inf coordinates")
    return pts


def as_vector3(obj, *, name: str = "vector") -> np.ndarray:
    v = np.asarray(obj, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise InvalidArgument(f"{name} must have 3 components, got shape {np.shape(obj)}")
    if not np.isfinite(v).all():
        raise InvalidArgument(f"{name} contains NaN or Inf")
    return v


def check_positive(value, *, name: str):
    if not value > 0:
        raise InvalidArgument(f"{name} must be positive, got {value!r}")
    return value


def check_in_range(value, lo, hi, *, name: str):
    if not (lo <= value <= hi):
        raise InvalidArgument(f"{name} must be in [{lo}, {hi}], got {value!r}")
    return value


def readonly(arr: np.ndarray) -> np.ndarray:
    """Mark an array immutable; value types share freely across threads."""
    arr.flags.writeable = False
    return arr
