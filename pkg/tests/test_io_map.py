import struct
import zlib

import numpy as np
import pytest

from seglocal.descriptor import Descriptor, DescriptorKind, eigenvalue_descriptor
from seglocal.errors import CorruptFile, EmptyInput, InvalidArgument, VersionMismatch
from seglocal.geometry import Segment
from seglocal.io import SegmentMap, load_map, save_map


def eigen_map(rng, n=5):
    entries = []
    for _ in range(n):
        seg = Segment(rng.normal(size=(rng.integers(10, 40), 3)) * (2.0, 1.0, 0.5))
        entries.append((seg, eigenvalue_descriptor(seg)))
    return SegmentMap.from_entries(entries)


def learned_map(rng, n=5, with_quality=True):
    entries = []
    for i in range(n):
        seg = Segment(rng.normal(size=(20, 3)))
        quality = float(rng.uniform(0, 1)) if with_quality else None
        desc = Descriptor(rng.normal(size=16), DescriptorKind.LEARNED16, quality=quality)
        entries.append((seg, desc))
    return SegmentMap.from_entries(entries)


class TestConstruction:
    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            SegmentMap.from_entries([])

    def test_mixed_kinds_rejected(self, rng):
        seg = Segment(rng.normal(size=(20, 3)))
        entries = [
            (seg, Descriptor(rng.normal(size=16), DescriptorKind.LEARNED16)),
            (seg, Descriptor(rng.normal(size=7), DescriptorKind.EIGEN7)),
        ]
        with pytest.raises(InvalidArgument):
            SegmentMap.from_entries(entries)

    def test_quality_stored_only_when_complete(self, rng):
        seg = Segment(rng.normal(size=(20, 3)))
        entries = [
            (seg, Descriptor(rng.normal(size=16), DescriptorKind.LEARNED16, quality=0.5)),
            (seg, Descriptor(rng.normal(size=16), DescriptorKind.LEARNED16)),
        ]
        assert SegmentMap.from_entries(entries).qualities is None

    def test_coordinates_quantized_to_f32(self, rng):
        seg = Segment(rng.normal(size=(10, 3)))
        built = SegmentMap.from_entries([(seg, eigenvalue_descriptor(seg))])
        stored = built.segments[0].points
        assert np.array_equal(stored, stored.astype(np.float32).astype(np.float64))


class TestRoundTrip:
    def test_single_segment_map(self, tmp_path, rng):
        m = eigen_map(rng, n=1)
        path = tmp_path / "one.segm"
        save_map(m, path)
        assert load_map(path).equals(m)

    def test_thousand_segment_map_bit_exact(self, tmp_path, rng):
        entries = []
        for _ in range(1000):
            seg = Segment(rng.normal(size=(5, 3)))
            entries.append((seg, Descriptor(rng.normal(size=7), DescriptorKind.EIGEN7)))
        m = SegmentMap.from_entries(entries)
        path = tmp_path / "big.segm"
        save_map(m, path)
        loaded = load_map(path)
        assert np.array_equal(loaded.descriptors, m.descriptors)  # bit-exact
        assert loaded.equals(m)

    def test_quality_roundtrip(self, tmp_path, rng):
        m = learned_map(rng, with_quality=True)
        path = tmp_path / "q.segm"
        save_map(m, path)
        loaded = load_map(path)
        assert loaded.qualities is not None
        assert np.array_equal(loaded.qualities, m.qualities)

    def test_save_load_save_is_stable(self, tmp_path, rng):
        m = eigen_map(rng)
        p1, p2 = tmp_path / "a.segm", tmp_path / "b.segm"
        save_map(m, p1)
        save_map(load_map(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestCorruption:
    def test_truncated_file(self, tmp_path, rng):
        path = tmp_path / "t.segm"
        save_map(eigen_map(rng), path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 7])
        with pytest.raises(CorruptFile):
            load_map(path)

    def test_flipped_byte(self, tmp_path, rng):
        path = tmp_path / "flip.segm"
        save_map(eigen_map(rng), path)
        blob = bytearray(path.read_bytes())
        blob[25] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(CorruptFile):
            load_map(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.segm"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(CorruptFile):
            load_map(path)

    def test_version_mismatch(self, tmp_path, rng):
        path = tmp_path / "v.segm"
        save_map(eigen_map(rng), path)
        blob = bytearray(path.read_bytes())[:-4]
        blob[4:8] = struct.pack("<I", 42)
        blob += struct.pack("<I", zlib.crc32(bytes(blob)) & 0xFFFFFFFF)
        path.write_bytes(bytes(blob))
        with pytest.raises(VersionMismatch):
            load_map(path)
