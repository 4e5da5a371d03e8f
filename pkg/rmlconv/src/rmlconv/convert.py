"""Convert the RadioML 2016.10A pickle archive into an IQDS dataset file.

The archive is a Python-2 pickle of a dict mapping (modulation label,
snr_db) to an (n, 2, 128) float32 array. Row order inside a frame is
undocumented upstream; this tool assumes row 0 = I and row 1 = Q and
offers ``swap_iq`` for archives that disagree. Sample values pass through
unmodified.

Output is the IQDS format (little-endian)::

    magic "IQDS", version u16 = 1, frame_len u32, frame_count u64,
    class_count u8, class_count x (name_len u8, UTF-8 name),
    then per frame: class_id u8, snr_db i16, float32 I row, float32 Q row.

Class ids are the toolkit ordinals below, and the full 8-name table is
always written so ids keep their meaning under any filter. Frames are
ordered by (class id, snr, original archive index).
"""

from __future__ import annotations

import pickle
import struct
from dataclasses import dataclass

import numpy as np

CLASS_NAMES = ("8PSK", "BPSK", "CPFSK", "GFSK", "PAM4", "QAM16", "QAM64", "QPSK")
DEFAULT_SNRS = tuple(range(-6, 16, 2))
FRAME_SHAPE = (2, 128)

MAGIC = b"IQDS"
VERSION = 1
_HEADER = struct.Struct("<HIQB")
_FRAME_TAG = struct.Struct("<Bh")

__all__ = [
    "ArchiveError",
    "CLASS_NAMES",
    "ConvertSpec",
    "DEFAULT_SNRS",
    "FilterError",
    "convert",
    "load_archive",
]


class ArchiveError(ValueError):
    """The input file is not a readable RadioML 2016.10A archive."""


class FilterError(ValueError):
    """The class/SNR selection cannot be satisfied."""


@dataclass
class ConvertSpec:
    input: str
    output: str
    classes: tuple = CLASS_NAMES
    snrs: tuple = DEFAULT_SNRS
    swap_iq: bool = False

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.snrs = tuple(int(s) for s in self.snrs)
        if not self.classes:
            raise FilterError("class filter selects nothing")
        if not self.snrs:
            raise FilterError("snr filter selects nothing")
        unknown = [c for c in self.classes if c not in CLASS_NAMES]
        if unknown:
            raise FilterError(
                f"unknown modulation label(s): {', '.join(unknown)}; "
                f"known: {', '.join(CLASS_NAMES)}"
            )


def load_archive(path):
    """Read and structurally validate the pickle; keys become (str, int)."""
    with open(path, "rb") as fh:
        try:
            raw = pickle.load(fh, encoding="latin1")
        except (pickle.UnpicklingError, EOFError, AttributeError,
                ImportError, IndexError, ValueError) as exc:
            raise ArchiveError(f"not a readable pickle archive: {exc}") from exc
    if not isinstance(raw, dict) or not raw:
        raise ArchiveError(
            "archive root must be a non-empty dict keyed by (modulation, snr)"
        )
    archive = {}
    for key, value in raw.items():
        if (
            not isinstance(key, tuple)
            or len(key) != 2
            or not isinstance(key[0], str)
            or not isinstance(key[1], (int, np.integer))
        ):
            raise ArchiveError(f"bad archive key {key!r}, expected (label, snr)")
        arr = np.asarray(value)
        if arr.ndim != 3 or arr.shape[1:] != FRAME_SHAPE:
            raise ArchiveError(
                f"{key}: expected (n, 2, 128) frames, got shape {arr.shape}"
            )
        archive[(key[0], int(key[1]))] = arr
    return archive


def convert(spec):
    """Run the conversion; returns the number of frames written."""
    archive = load_archive(spec.input)
    labels = {k[0] for k in archive}
    snrs_present = {k[1] for k in archive}
    missing = [c for c in spec.classes if c not in labels]
    if missing:
        raise FilterError(f"archive lacks modulation(s): {', '.join(missing)}")
    missing_snr = [s for s in spec.snrs if s not in snrs_present]
    if missing_snr:
        raise FilterError(f"archive lacks snr(s): {missing_snr}")

    chunks = []
    total = 0
    for name in sorted(set(spec.classes), key=CLASS_NAMES.index):
        class_id = CLASS_NAMES.index(name)
        for snr in sorted(set(spec.snrs)):
            arr = np.asarray(archive[(name, snr)], dtype="<f4")
            if spec.swap_iq:
                arr = arr[:, ::-1, :]
            chunks.append((class_id, snr, arr))
            total += len(arr)
    if total == 0:
        raise FilterError("selection contains no frames")
    _write_iqds(spec.output, chunks, total)
    return total


def _write_iqds(path, chunks, total):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, FRAME_SHAPE[1], total, len(CLASS_NAMES)))
        for name in CLASS_NAMES:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<B", len(raw)))
            fh.write(raw)
        for class_id, snr, arr in chunks:
            tag = _FRAME_TAG.pack(class_id, snr)
            flat = np.ascontiguousarray(arr, dtype="<f4").reshape(len(arr), -1)
            fh.write(b"".join(tag + row.tobytes() for row in flat))
