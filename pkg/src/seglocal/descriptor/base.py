"""Descriptor value type shared by both descriptor backends."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from ..validation import readonly


class DescriptorKind(str, enum.Enum):
    LEARNED16 = "learned16"
    EIGEN7 = "eigen7"

    @property
    def dim(self) -> int:
        return 16 if self is DescriptorKind.LEARNED16 else 7


@dataclass(frozen=True, eq=False)
class Descriptor:
    """Fixed-length feature vector with an optional quality score in [0, 1]."""

    values: np.ndarray
    kind: DescriptorKind
    quality: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        kind = DescriptorKind(self.kind)
        if values.shape[0] != kind.dim:
            raise InvalidArgument(f"{kind.value} descriptor must have {kind.dim} values, got {values.shape[0]}")
        if not np.isfinite(values).all():
            raise InvalidArgument("descriptor values must be finite")
        if self.quality is not None and not 0.0 <= self.quality <= 1.0:
            raise InvalidArgument(f"quality must be in [0, 1], got {self.quality}")
        object.__setattr__(self, "values", readonly(values))
        object.__setattr__(self, "kind", kind)

    def __len__(self) -> int:
        return self.values.shape[0]
