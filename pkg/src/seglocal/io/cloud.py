"""Point-cloud ingestion: ASCII/binary PLY and XYZ CSV.

Rows with non-finite coordinates are dropped and reported through a
:class:`~seglocal.errors.NonFiniteRowWarning` carrying the drop count.
"""

from __future__ import annotations

import struct
import warnings
from pathlib import Path

import numpy as np

from ..errors import NonFiniteRowWarning, ParseError, UnsupportedFormat
from ..geometry import PointCloud

CLOUD_FORMATS = ("ascii_ply", "binary_ply", "xyz_csv")

_PLY_TYPE_SIZES = {
    "char": 1, "int8": 1, "uchar": 1, "uint8": 1,
    "short": 2, "int16": 2, "ushort": 2, "uint16": 2,
    "int": 4, "int32": 4, "uint": 4, "uint32": 4,
    "float": 4, "float32": 4,
    "double": 8, "float64": 8,
}
_PLY_FLOAT_CODES = {"float": "f", "float32": "f", "double": "d", "float64": "d"}


def detect_format(path) -> str:
    """Guess the format from the file head; PLY binariness from the header."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(512)
    if head.startswith(b"ply"):
        return "binary_ply" if b"format binary" in head else "ascii_ply"
    if path.suffix.lower() in (".csv", ".xyz", ".txt"):
        return "xyz_csv"
    raise UnsupportedFormat(f"{path}: cannot determine cloud format")


def load_cloud(path, fmt: str | None = None) -> PointCloud:
    """Load a cloud; all finite points kept, non-finite rows dropped with a
    warning carrying the count."""
    path = Path(path)
    fmt = fmt or detect_format(path)
    if fmt == "xyz_csv":
        points, dropped = _read_xyz_csv(path)
    elif fmt in ("ascii_ply", "binary_ply"):
        points, dropped = _read_ply(path, binary=(fmt == "binary_ply"))
    else:
        raise UnsupportedFormat(f"unknown cloud format {fmt!r} (expected one of {CLOUD_FORMATS})")
    if dropped:
        warnings.warn(NonFiniteRowWarning(dropped, path), stacklevel=2)
    return PointCloud(points, frame_id=path.stem)


def _finite_filter(points: np.ndarray):
    if points.shape[0] == 0:
        return points, 0
    keep = np.isfinite(points).all(axis=1)
    return points[keep], int((~keep).sum())


def _read_xyz_csv(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split(",")
            if len(parts) != 3:
                raise ParseError(path, lineno, f"expected 3 comma-separated values, got {len(parts)}")
            try:
                rows.append([float(v) for v in parts])
            except ValueError as exc:
                raise ParseError(path, lineno, f"bad number: {exc}") from exc
    return _finite_filter(np.asarray(rows, dtype=np.float64).reshape(-1, 3))


class _PlyHeader:
    def __init__(self):
        self.binary = False
        self.little_endian = True
        self.vertex_count = 0
        self.properties = []       # (name, type) for the vertex element
        self.vertex_is_first = True
        self.data_start = 0


def _parse_ply_header(path) -> _PlyHeader:
    header = _PlyHeader()
    with open(path, "rb") as fh:
        first = fh.readline()
        if first.strip() != b"ply":
            raise ParseError(path, 1, "missing 'ply' magic line")
        element = None
        seen_elements = 0
        lineno = 1
        while True:
            raw = fh.readline()
            lineno += 1
            if not raw:
                raise ParseError(path, lineno, "header ended before end_header")
            try:
                line = raw.decode("ascii").strip()
            except UnicodeDecodeError as exc:
                raise ParseError(path, lineno, "non-ASCII bytes in header") from exc
            if not line or line.startswith("comment") or line.startswith("obj_info"):
                continue
            fields = line.split()
            if fields[0] == "format":
                if fields[1] == "ascii":
                    header.binary = False
                elif fields[1] == "binary_little_endian":
                    header.binary, header.little_endian = True, True
                elif fields[1] == "binary_big_endian":
                    raise UnsupportedFormat(f"{path}: big-endian PLY is not supported")
                else:
                    raise ParseError(path, lineno, f"unknown PLY format {fields[1]!r}")
            elif fields[0] == "element":
                element = fields[1]
                if element == "vertex":
                    header.vertex_count = int(fields[2])
                    header.vertex_is_first = seen_elements == 0
                seen_elements += 1
            elif fields[0] == "property":
                if element == "vertex":
                    if fields[1] == "list":
                        raise UnsupportedFormat(f"{path}: list properties on vertices are not supported")
                    header.properties.append((fields[-1], fields[1]))
            elif fields[0] == "end_header":
                header.data_start = fh.tell()
                break
        if header.vertex_count > 0 and not header.vertex_is_first:
            raise UnsupportedFormat(f"{path}: vertex element must come first")
        return header


def _vertex_layout(path, header: _PlyHeader):
    """Byte offsets of x, y, z inside one vertex record, plus its stride."""
    offsets = {}
    stride = 0
    for name, typ in header.properties:
        size = _PLY_TYPE_SIZES.get(typ)
        if size is None:
            raise ParseError(path, 0, f"unknown property type {typ!r}")
        if name in ("x", "y", "z"):
            if typ not in _PLY_FLOAT_CODES:
                raise UnsupportedFormat(f"{path}: coordinate property {name} must be float32 or float64")
            offsets[name] = (stride, _PLY_FLOAT_CODES[typ])
        stride += size
    missing = {"x", "y", "z"} - set(offsets)
    if missing:
        raise ParseError(path, 0, f"vertex element lacks propert{'y' if len(missing) == 1 else 'ies'} {sorted(missing)}")
    return offsets, stride


def _read_ply(path, binary: bool):
    header = _parse_ply_header(path)
    if header.binary != binary:
        declared = "binary" if header.binary else "ascii"
        raise ParseError(path, 1, f"file header declares {declared} PLY, not the requested format")
    if header.vertex_count == 0:
        return np.empty((0, 3)), 0
    offsets, stride = _vertex_layout(path, header)

    if not binary:
        columns = [i for i, (name, _) in enumerate(header.properties) if name in ("x", "y", "z")]
        name_order = [name for name, _ in header.properties if name in ("x", "y", "z")]
        points = np.empty((header.vertex_count, 3))
        with open(path, "rb") as fh:
            fh.seek(header.data_start)
            for row in range(header.vertex_count):
                raw = fh.readline()
                lineno = row + 1
                if not raw:
                    raise ParseError(path, lineno, "fewer vertex rows than the header declares")
                parts = raw.split()
                if len(parts) < len(header.properties):
                    raise ParseError(path, lineno, f"expected {len(header.properties)} columns, got {len(parts)}")
                try:
                    values = {name_order[j]: float(parts[col]) for j, col in enumerate(columns)}
                except ValueError as exc:
                    raise ParseError(path, lineno, f"bad number: {exc}") from exc
                points[row] = (values["x"], values["y"], values["z"])
        return _finite_filter(points)

    with open(path, "rb") as fh:
        fh.seek(header.data_start)
        blob = fh.read(stride * header.vertex_count)
    if len(blob) < stride * header.vertex_count:
        raise ParseError(path, 0, f"binary vertex block truncated at byte {len(blob)}")
    points = np.empty((header.vertex_count, 3))
    for col, axis in enumerate(("x", "y", "z")):
        offset, code = offsets[axis]
        fmt = "<" + code
        size = struct.calcsize(fmt)
        column = np.frombuffer(blob, dtype=np.dtype(fmt),
                               count=header.vertex_count, offset=offset
                               ) if stride == size else None
        if column is None:
            column = np.ndarray((header.vertex_count,), dtype=np.dtype(fmt), buffer=blob,
                                offset=offset, strides=(stride,))
        points[:, col] = column.astype(np.float64)
    return _finite_filter(points)


def save_cloud_xyz(cloud: PointCloud, path) -> None:
    """Write a cloud as XYZ CSV (full float64 precision)."""
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in cloud.points:
            fh.write(f"{float(x)!r},{float(y)!r},{float(z)!r}\n")
