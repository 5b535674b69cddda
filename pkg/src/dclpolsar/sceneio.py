"""Scene file format, legend export, and classification-map images.

Scene files are a self-describing little-endian binary layout::

    magic "DCLS" | version u16 | rows u32 | cols u32 | num_classes u16
    num_classes x (name_length u16 | UTF-8 name bytes)
    rows*cols*9 float64   pixel vectors, row-major, component order
    rows*cols   u16       labels, row-major, 0xFFFF = unlabeled

Everything is parsed from a fully read buffer, so a truncated file raises
before any dataset object exists.  Classification maps are written as binary
PGM (P5): pixel value = class index, 255 = no prediction; a sidecar legend
CSV maps indices to names and display colors.
"""

from __future__ import annotations

import csv
import struct
from typing import Sequence, TextIO

import numpy as np

from .coherency import NUM_COMPONENTS, UNLABELED, SceneDataset
from .errors import FormatError, VersionMismatchError

SCENE_MAGIC = b"DCLS"
SCENE_VERSION = 1

#: Label sentinel on disk (u16); in memory it maps to UNLABELED.
_UNLABELED_U16 = 0xFFFF

#: PGM gray value for pixels with no prediction.
NO_PREDICTION_GRAY = 255

_FIXED_HEADER = struct.Struct("<4sHIIH")

#: Display colors cycled over class indices in legend exports.
_LEGEND_COLORS = (
    "#4477aa",
    "#ee6677",
    "#228833",
    "#ccbb44",
    "#66ccee",
    "#aa3377",
    "#bbbbbb",
)


def save_scene(ds: SceneDataset, path) -> None:
    """Write a scene; the layout is documented in the module docstring."""
    blob = bytearray()
    blob += _FIXED_HEADER.pack(
        SCENE_MAGIC, SCENE_VERSION, ds.rows, ds.cols, ds.num_classes
    )
    for name in ds.class_names:
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
    blob += np.ascontiguousarray(ds.data, dtype="<f8").tobytes()
    on_disk = np.where(ds.labels == UNLABELED, _UNLABELED_U16, ds.labels)
    blob += on_disk.astype("<u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def load_scene(path) -> SceneDataset:
    """Read a scene written by :func:`save_scene`.

    Raises
    ------
    FormatError
        On bad magic, truncation, or trailing bytes; the message carries
        the byte offset where parsing failed.
    VersionMismatchError
        On an unsupported version.
    """
    with open(path, "rb") as fh:
        buf = fh.read()

    def need(end: int, what: str, offset: int) -> None:
        if end > len(buf):
            raise FormatError(
                f"file ends at byte {len(buf)}, needed {end} "
                f"(truncated while reading {what} at offset {offset})"
            )

    need(_FIXED_HEADER.size, "header", 0)
    magic, version, rows, cols, num_classes = _FIXED_HEADER.unpack_from(buf, 0)
    if magic != SCENE_MAGIC:
        raise FormatError(f"bad magic {magic!r} at byte 0, expected {SCENE_MAGIC!r}")
    if version != SCENE_VERSION:
        raise VersionMismatchError(
            f"version {version} not supported (expected {SCENE_VERSION})"
        )
    offset = _FIXED_HEADER.size

    names = []
    for _ in range(num_classes):
        need(offset + 2, "class-name length", offset)
        (length,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        need(offset + length, "class name", offset)
        try:
            names.append(buf[offset : offset + length].decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError(f"class name at offset {offset} is not UTF-8") from exc
        offset += length

    pixel_count = rows * cols
    data_bytes = pixel_count * NUM_COMPONENTS * 8
    need(offset + data_bytes, "pixel data", offset)
    data = (
        np.frombuffer(buf, dtype="<f8", count=pixel_count * NUM_COMPONENTS, offset=offset)
        .reshape(rows, cols, NUM_COMPONENTS)
        .copy()
    )
    offset += data_bytes

    label_bytes = pixel_count * 2
    need(offset + label_bytes, "labels", offset)
    raw = np.frombuffer(buf, dtype="<u2", count=pixel_count, offset=offset).reshape(
        rows, cols
    )
    offset += label_bytes
    if offset != len(buf):
        raise FormatError(f"unexpected trailing bytes at offset {offset}")

    labels = raw.astype(np.int32)
    labels[raw == _UNLABELED_U16] = UNLABELED
    return SceneDataset(data=data, labels=labels, class_names=tuple(names))


def legend_color(class_index: int) -> str:
    return _LEGEND_COLORS[class_index % len(_LEGEND_COLORS)]


def write_legend_csv(class_names: Sequence[str], stream: TextIO) -> None:
    """Class-index legend with display colors: class_index, name, rgb_hex."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["class_index", "name", "rgb_hex"])
    for i, name in enumerate(class_names):
        writer.writerow([i, name, legend_color(i)])


def write_pgm(raster: np.ndarray, path) -> None:
    """Write a class-index raster as binary PGM (P5).

    Pixels hold the class index; anything negative (no prediction or
    unlabeled) becomes gray 255.  Requires fewer than 255 classes.
    """
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise ValueError(f"raster must be 2-D, got shape {raster.shape}")
    if raster.max(initial=0) >= NO_PREDICTION_GRAY:
        raise ValueError("class indices above 254 do not fit a PGM byte")
    gray = np.where(raster < 0, NO_PREDICTION_GRAY, raster).astype(np.uint8)
    header = f"P5\n{raster.shape[1]} {raster.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + gray.tobytes())
