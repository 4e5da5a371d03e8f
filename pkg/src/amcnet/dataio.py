"""Binary dataset file format.

Little-endian layout::

    magic   "IQDS"  (4 bytes)
    version u16     (currently 1)
    frame_len u32
    frame_count u64
    class_count u8
    class_count x (name_len u8, UTF-8 name)
    frame_count records of:
        class_id u8
        snr_db   i16
        frame_len x f32   I row
        frame_len x f32   Q row
"""

from __future__ import annotations

import struct

import numpy as np

from .signals import Dataset, IQFrame

__all__ = ["DatasetFormatError", "write_dataset", "read_dataset"]

MAGIC = b"IQDS"
VERSION = 1
_HEADER = struct.Struct("<HIQB")
_FRAME_TAG = struct.Struct("<Bh")


class DatasetFormatError(ValueError):
    """Raised when a dataset file is malformed."""


def write_dataset(dataset, path):
    """Serialize a dataset; all frames must share one frame length."""
    frame_len = dataset.frame_len
    for f in dataset.frames:
        if f.frame_len != frame_len:
            raise ValueError(
                f"mixed frame lengths: {f.frame_len} vs {frame_len}"
            )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(
            _HEADER.pack(VERSION, frame_len, len(dataset.frames), len(dataset.class_names))
        )
        for name in dataset.class_names:
            raw = name.encode("utf-8")
            if len(raw) > 255:
                raise ValueError(f"class name too long: {name!r}")
            fh.write(struct.pack("<B", len(raw)))
            fh.write(raw)
        for f in dataset.frames:
            fh.write(_FRAME_TAG.pack(f.class_id, f.snr_db))
            fh.write(np.ascontiguousarray(f.samples, dtype="<f4").tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise DatasetFormatError(f"truncated file while reading {what}")
    return buf


def read_dataset(path):
    """Read a dataset file written by :func:`write_dataset`."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise DatasetFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version, frame_len, frame_count, class_count = _HEADER.unpack(
            _read_exact(fh, _HEADER.size, "header")
        )
        if version != VERSION:
            raise DatasetFormatError(f"unsupported version {version}")
        class_names = []
        for i in range(class_count):
            (name_len,) = struct.unpack("<B", _read_exact(fh, 1, f"class name {i}"))
            class_names.append(
                _read_exact(fh, name_len, f"class name {i}").decode("utf-8")
            )
        frames = []
        row_bytes = 4 * frame_len
        for i in range(frame_count):
            class_id, snr_db = _FRAME_TAG.unpack(
                _read_exact(fh, _FRAME_TAG.size, f"frame {i} tag")
            )
            if class_id >= class_count:
                raise DatasetFormatError(
                    f"frame {i}: class_id {class_id} outside class table"
                )
            raw = _read_exact(fh, 2 * row_bytes, f"frame {i} samples")
            samples = np.frombuffer(raw, dtype="<f4").reshape(2, frame_len)
            frames.append(IQFrame(class_id=class_id, snr_db=snr_db, samples=samples))
        trailing = fh.read(1)
        if trailing:
            raise DatasetFormatError("trailing bytes after last frame")
    return Dataset(frames=frames, class_names=class_names)
