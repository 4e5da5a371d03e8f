"""Binary checkpoint format for network weights.

Layout (little-endian throughout)::

    magic   4 bytes  b"MSNC"
    version u16      currently 1
    count   u32      number of named arrays
    then per array:
        name_len u16, name UTF-8
        rank     u8,  rank x u32 dims
        data     float32, C order

Arrays are written in sorted-name order so files are byte-stable for a
given state. Loading returns plain ``{name: float32 ndarray}``.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = ["CheckpointFormatError", "save_checkpoint", "load_checkpoint"]

MAGIC = b"MSNC"
VERSION = 1

_HEADER = struct.Struct("<HI")
_NAME_LEN = struct.Struct("<H")
_RANK = struct.Struct("<B")


class CheckpointFormatError(ValueError):
    """Raised when a checkpoint file is malformed."""


def save_checkpoint(state, path):
    """Write ``{name: array}`` to ``path`` in sorted-name order."""
    names = sorted(state)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(VERSION, len(names)))
        for name in names:
            arr = np.ascontiguousarray(state[name], dtype="<f4")
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"parameter name too long: {name!r}")
            if arr.ndim > 0xFF:
                raise ValueError(f"parameter rank too large: {name!r}")
            fh.write(_NAME_LEN.pack(len(encoded)))
            fh.write(encoded)
            fh.write(_RANK.pack(arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def _read_exact(fh, n, what):
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointFormatError(
            f"truncated checkpoint: expected {n} bytes for {what}, got {len(data)}"
        )
    return data


def load_checkpoint(path):
    """Read a checkpoint back into ``{name: float32 ndarray}``."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise CheckpointFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version, count = _HEADER.unpack(_read_exact(fh, _HEADER.size, "header"))
        if version != VERSION:
            raise CheckpointFormatError(f"unsupported checkpoint version {version}")
        state = {}
        for i in range(count):
            (name_len,) = _NAME_LEN.unpack(
                _read_exact(fh, _NAME_LEN.size, f"name length of entry {i}")
            )
            name = _read_exact(fh, name_len, f"name of entry {i}").decode("utf-8")
            (rank,) = _RANK.unpack(_read_exact(fh, _RANK.size, f"rank of {name}"))
            dims = struct.unpack(
                f"<{rank}I", _read_exact(fh, 4 * rank, f"shape of {name}")
            )
            n_items = int(np.prod(dims, dtype=np.int64)) if rank else 1
            raw = _read_exact(fh, 4 * n_items, f"data of {name}")
            if name in state:
                raise CheckpointFormatError(f"duplicate parameter {name!r}")
            state[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
        trailer = fh.read(1)
        if trailer:
            raise CheckpointFormatError("trailing bytes after last parameter")
    return state
