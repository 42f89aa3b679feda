import struct

import numpy as np
import pytest

from seglocal.errors import NonFiniteRowWarning, ParseError, UnsupportedFormat
from seglocal.io import load_cloud, save_cloud_xyz
from seglocal.geometry import PointCloud


def write_ascii_ply(path, rows, extra_props=(), comment=None):
    props = ["property float x", "property float y", "property float z"]
    props += [f"property float {name}" for name in extra_props]
    header = ["ply", "format ascii 1.0"]
    if comment:
        header.append(f"comment {comment}")
    header += [f"element vertex {len(rows)}", *props, "end_header"]
    body = "\n".join(" ".join(str(v) for v in row) for row in rows)
    path.write_text("\n".join(header) + ("\n" + body + "\n" if rows else "\n"))


def write_binary_ply(path, points, dtype="float", prefix_prop=None):
    code = {"float": "f", "double": "d"}[dtype]
    props = []
    if prefix_prop:
        props.append(f"property {prefix_prop[0]} {prefix_prop[1]}")
    props += [f"property {dtype} x", f"property {dtype} y", f"property {dtype} z"]
    header = "\n".join([
        "ply", "format binary_little_endian 1.0",
        f"element vertex {len(points)}", *props, "end_header",
    ]) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for p in points:
            if prefix_prop:
                fh.write(struct.pack("<" + {"uchar": "B", "int": "i"}[prefix_prop[0]], 7))
            fh.write(struct.pack("<3" + code, *p))


class TestAsciiPly:
    def test_three_points(self, tmp_path):
        path = tmp_path / "three.ply"
        write_ascii_ply(path, [(0, 0, 0), (1, 0, 0), (0, 2, 0)])
        cloud = load_cloud(path, "ascii_ply")
        assert np.allclose(cloud.points, [(0, 0, 0), (1, 0, 0), (0, 2, 0)])

    def test_empty_vertex_count(self, tmp_path):
        path = tmp_path / "empty.ply"
        write_ascii_ply(path, [])
        assert len(load_cloud(path, "ascii_ply")) == 0

    def test_nan_row_dropped_with_count(self, tmp_path):
        rows = [(float(i), 0.0, 0.0) for i in range(10)]
        rows[4] = (float("nan"), 0.0, 0.0)
        path = tmp_path / "nan.ply"
        write_ascii_ply(path, rows)
        with pytest.warns(NonFiniteRowWarning) as captured:
            cloud = load_cloud(path, "ascii_ply")
        assert len(cloud) == 9
        assert captured[0].message.count == 1

    def test_extra_properties_skipped(self, tmp_path):
        path = tmp_path / "extra.ply"
        write_ascii_ply(path, [(1, 2, 3, 9), (4, 5, 6, 9)], extra_props=("intensity",))
        cloud = load_cloud(path, "ascii_ply")
        assert np.allclose(cloud.points, [(1, 2, 3), (4, 5, 6)])

    def test_truncated_body(self, tmp_path):
        path = tmp_path / "short.ply"
        write_ascii_ply(path, [(0, 0, 0), (1, 1, 1)])
        text = path.read_text().splitlines()
        path.write_text("\n".join(text[:-1]) + "\n")
        with pytest.raises(ParseError):
            load_cloud(path, "ascii_ply")

    def test_bad_number(self, tmp_path):
        path = tmp_path / "bad.ply"
        write_ascii_ply(path, [("a", 0, 0)])
        with pytest.raises(ParseError):
            load_cloud(path, "ascii_ply")

    def test_missing_coordinate_property(self, tmp_path):
        path = tmp_path / "noz.ply"
        path.write_text("ply\nformat ascii 1.0\nelement vertex 1\n"
                        "property float x\nproperty float y\nend_header\n0 0\n")
        with pytest.raises(ParseError):
            load_cloud(path, "ascii_ply")


class TestBinaryPly:
    def test_float32_roundtrip(self, tmp_path, rng):
        pts = rng.normal(size=(20, 3)).astype(np.float32)
        path = tmp_path / "f32.ply"
        write_binary_ply(path, pts, "float")
        cloud = load_cloud(path, "binary_ply")
        assert np.allclose(cloud.points, pts.astype(np.float64))

    def test_float64_roundtrip(self, tmp_path, rng):
        pts = rng.normal(size=(15, 3))
        path = tmp_path / "f64.ply"
        write_binary_ply(path, pts, "double")
        cloud = load_cloud(path, "binary_ply")
        assert np.array_equal(cloud.points, pts)

    def test_strided_extra_property(self, tmp_path, rng):
        pts = rng.normal(size=(8, 3)).astype(np.float32)
        path = tmp_path / "strided.ply"
        write_binary_ply(path, pts, "float", prefix_prop=("uchar", "flag"))
        cloud = load_cloud(path, "binary_ply")
        assert np.allclose(cloud.points, pts.astype(np.float64))

    def test_nonfinite_dropped(self, tmp_path):
        pts = np.array([(0, 0, 0), (np.inf, 0, 0), (1, 1, 1)], dtype=np.float32)
        path = tmp_path / "inf.ply"
        write_binary_ply(path, pts, "float")
        with pytest.warns(NonFiniteRowWarning):
            cloud = load_cloud(path, "binary_ply")
        assert len(cloud) == 2

    def test_truncated_block(self, tmp_path, rng):
        pts = rng.normal(size=(10, 3)).astype(np.float32)
        path = tmp_path / "trunc.ply"
        write_binary_ply(path, pts, "float")
        blob = path.read_bytes()
        path.write_bytes(blob[:-10])
        with pytest.raises(ParseError):
            load_cloud(path, "binary_ply")

    def test_big_endian_unsupported(self, tmp_path):
        path = tmp_path / "big.ply"
        path.write_bytes(b"ply\nformat binary_big_endian 1.0\nelement vertex 0\n"
                         b"property float x\nproperty float y\nproperty float z\nend_header\n")
        with pytest.raises(UnsupportedFormat):
            load_cloud(path, "binary_ply")

    def test_declared_format_must_match(self, tmp_path):
        path = tmp_path / "declared.ply"
        write_ascii_ply(path, [(0, 0, 0)])
        with pytest.raises(ParseError):
            load_cloud(path, "binary_ply")


class TestXyzCsv:
    def test_roundtrip_via_writer(self, tmp_path, rng):
        cloud = PointCloud(rng.normal(size=(25, 3)), frame_id="x")
        path = tmp_path / "pts.csv"
        save_cloud_xyz(cloud, path)
        loaded = load_cloud(path, "xyz_csv")
        assert np.array_equal(loaded.points, cloud.points)

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n")
        with pytest.raises(ParseError):
            load_cloud(path, "xyz_csv")

    def test_nan_dropped(self, tmp_path):
        path = tmp_path / "nan.csv"
        path.write_text("0,0,0\nnan,1,1\n2,2,2\n")
        with pytest.warns(NonFiniteRowWarning) as captured:
            cloud = load_cloud(path, "xyz_csv")
        assert len(cloud) == 2
        assert captured[0].message.count == 1

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "comments.csv"
        path.write_text("# header\n\n1,2,3\n")
        assert len(load_cloud(path, "xyz_csv")) == 1


class TestFormatDetection:
    def test_autodetect(self, tmp_path, rng):
        ascii_path = tmp_path / "a.ply"
        write_ascii_ply(ascii_path, [(0, 0, 0)])
        binary_path = tmp_path / "b.ply"
        write_binary_ply(binary_path, rng.normal(size=(3, 3)).astype(np.float32))
        csv_path = tmp_path / "c.csv"
        csv_path.write_text("1,2,3\n")
        assert len(load_cloud(ascii_path)) == 1
        assert len(load_cloud(binary_path)) == 3
        assert len(load_cloud(csv_path)) == 1

    def test_unknown_extension(self, tmp_path):
        path = tmp_path / "mystery.bin"
        path.write_bytes(b"\x00\x01")
        with pytest.raises(UnsupportedFormat):
            load_cloud(path)

    def test_unknown_format_name(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("1,2,3\n")
        with pytest.raises(UnsupportedFormat):
            load_cloud(path, "laz")
