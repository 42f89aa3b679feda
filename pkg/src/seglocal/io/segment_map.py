"""The prior map: segments with descriptors, persisted as a SEGM container.

Layout (all little-endian):

    magic "SEGM" | u32 version | u8 kind | u8 has_quality | u16 desc_len |
    u32 n_segments |
    per segment: u32 n_points, f32 xyz * n_points, f32 desc * desc_len,
                 f32 quality (only if has_quality) |
    u32 CRC32 of every preceding byte

Coordinates and descriptor values are quantized to float32 at map
construction, so save/load round-trips are bit-exact.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..descriptor import Descriptor, DescriptorKind
from ..errors import CorruptFile, EmptyInput, InvalidArgument, VersionMismatch
from ..geometry import Segment
from ..validation import readonly

MAP_MAGIC = b"SEGM"
MAP_VERSION = 1

_KIND_CODES = {DescriptorKind.LEARNED16: 1, DescriptorKind.EIGEN7: 2}
_CODE_KINDS = {code: kind for kind, code in _KIND_CODES.items()}


def _quantize(values) -> np.ndarray:
    """Round-trip through float32 so stored values are exactly representable."""
    return np.asarray(values, dtype=np.float32).astype(np.float64)


@dataclass(frozen=True, eq=False)
class SegmentMap:
    """Immutable database of (segment, descriptor, optional quality) rows.

    Segment ids are positional: row i is segment id i.
    """

    segments: tuple
    descriptors: np.ndarray          # (n, desc_len) float32
    qualities: np.ndarray | None     # (n,) float32, or None
    kind: DescriptorKind
    format_version: int = MAP_VERSION

    def __post_init__(self):
        kind = DescriptorKind(self.kind)
        desc = np.asarray(self.descriptors, dtype=np.float32)
        if desc.ndim != 2 or desc.shape[1] != kind.dim:
            raise InvalidArgument(f"descriptors must have shape (n, {kind.dim}) for kind {kind.value}")
        if desc.shape[0] != len(self.segments):
            raise InvalidArgument("one descriptor row per segment required")
        qualities = self.qualities
        if qualities is not None:
            qualities = np.asarray(qualities, dtype=np.float32).reshape(-1)
            if qualities.shape[0] != len(self.segments):
                raise InvalidArgument("one quality per segment required")
            object.__setattr__(self, "qualities", readonly(qualities))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "descriptors", readonly(desc))

    def __len__(self) -> int:
        return len(self.segments)

    @property
    def centroids(self) -> np.ndarray:
        return np.array([seg.centroid for seg in self.segments]).reshape(len(self.segments), 3)

    @classmethod
    def from_entries(cls, entries, kind: DescriptorKind | None = None) -> "SegmentMap":
        """Build from (Segment, Descriptor) pairs, quantizing to float32.

        Qualities are stored only when every descriptor carries one.
        """
        entries = list(entries)
        if not entries:
            raise EmptyInput("a segment map needs at least one segment")
        kinds = {desc.kind for _, desc in entries}
        if len(kinds) != 1:
            raise InvalidArgument(f"mixed descriptor kinds in one map: {sorted(k.value for k in kinds)}")
        found_kind = kinds.pop()
        if kind is not None and DescriptorKind(kind) is not found_kind:
            raise InvalidArgument(f"expected {DescriptorKind(kind).value} descriptors, got {found_kind.value}")

        segments = tuple(
            Segment(_quantize(seg.points), source_cloud=seg.source_cloud) for seg, _ in entries
        )
        descriptors = np.vstack([desc.values for _, desc in entries]).astype(np.float32)
        qualities = None
        if all(desc.quality is not None for _, desc in entries):
            qualities = np.array([desc.quality for _, desc in entries], dtype=np.float32)
        return cls(segments, descriptors, qualities, found_kind)

    def descriptor(self, index: int) -> Descriptor:
        quality = float(self.qualities[index]) if self.qualities is not None else None
        return Descriptor(self.descriptors[index], self.kind, quality=quality)

    def equals(self, other: "SegmentMap") -> bool:
        """Structural, bit-exact equality of every field."""
        if (self.kind is not other.kind or self.format_version != other.format_version
                or len(self) != len(other)):
            return False
        if not np.array_equal(self.descriptors, other.descriptors):
            return False
        if (self.qualities is None) != (other.qualities is None):
            return False
        if self.qualities is not None and not np.array_equal(self.qualities, other.qualities):
            return False
        return all(
            np.array_equal(a.points, b.points) for a, b in zip(self.segments, other.segments)
        )


def save_map(segment_map: SegmentMap, path) -> None:
    has_quality = segment_map.qualities is not None
    chunks = [
        MAP_MAGIC,
        struct.pack(
            "<IBBHI",
            MAP_VERSION,
            _KIND_CODES[segment_map.kind],
            1 if has_quality else 0,
            segment_map.kind.dim,
            len(segment_map),
        ),
    ]
    for i, seg in enumerate(segment_map.segments):
        chunks.append(struct.pack("<I", len(seg)))
        chunks.append(np.ascontiguousarray(seg.points, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(segment_map.descriptors[i], dtype="<f4").tobytes())
        if has_quality:
            chunks.append(struct.pack("<f", float(segment_map.qualities[i])))
    blob = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(blob)
        fh.write(struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF))


def load_map(path) -> SegmentMap:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 20 or blob[:4] != MAP_MAGIC:
        raise CorruptFile(f"{path}: not a SEGM map file")
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != struct.unpack("<I", blob[-4:])[0]:
        raise CorruptFile(f"{path}: checksum failure (truncated or corrupted)")
    version, kind_code, has_quality, desc_len, n_segments = struct.unpack_from("<IBBHI", blob, 4)
    if version != MAP_VERSION:
        raise VersionMismatch(f"{path}: map version {version}, expected {MAP_VERSION}")
    kind = _CODE_KINDS.get(kind_code)
    if kind is None:
        raise CorruptFile(f"{path}: unknown descriptor kind code {kind_code}")
    if desc_len != kind.dim:
        raise CorruptFile(f"{path}: descriptor length {desc_len} does not match kind {kind.value}")

    offset = 16
    end = len(blob) - 4
    segments = []
    descriptors = np.empty((n_segments, desc_len), dtype=np.float32)
    qualities = np.empty(n_segments, dtype=np.float32) if has_quality else None
    for i in range(n_segments):
        if offset + 4 > end:
            raise CorruptFile(f"{path}: segment table truncated at entry {i}")
        (n_points,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        need = 4 * (3 * n_points + desc_len + (1 if has_quality else 0))
        if offset + need > end:
            raise CorruptFile(f"{path}: segment {i} payload truncated")
        points = np.frombuffer(blob, dtype="<f4", count=3 * n_points, offset=offset).reshape(n_points, 3)
        offset += 12 * n_points
        descriptors[i] = np.frombuffer(blob, dtype="<f4", count=desc_len, offset=offset)
        offset += 4 * desc_len
        if has_quality:
            (qualities[i],) = struct.unpack_from("<f", blob, offset)
            offset += 4
        segments.append(Segment(points.astype(np.float64)))
    if offset != end:
        raise CorruptFile(f"{path}: {end - offset} unexpected trailing bytes")
    return SegmentMap(tuple(segments), descriptors, qualities, kind, format_version=version)
