"""Binary trajectory record files.

Stable on-disk layout (little-endian throughout):

    offset  size  field
    0       4     magic "VRRW"
    4       2     format version (currently 1)
    6       8     master seed (u64)
    14      8     stream index (u64)
    22      2     weight spec length L (u16)
    24      L     weight spec, UTF-8 (e.g. "power(0.3)")
    24+L    8     move count M (u64)
    32+L    M     move bytes: 0 = left step, 1 = right step

A record is replayable two ways: by feeding the move bytes through the walk
bookkeeping, or by re-simulating from (master seed, stream index) and the
weight spec.  The two must agree move for move; a mismatch means the file was
corrupted or does not belong to the claimed stream.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .walk import TrajectoryRecord

MAGIC = b"VRRW"
VERSION = 1
_HEAD = struct.Struct("<4sHQQH")
_COUNT = struct.Struct("<Q")


class RecordFormatError(ValueError):
    """Raised when a record file is malformed."""


def write_record(path: str | Path, record: TrajectoryRecord) -> None:
    spec = record.weight_spec.encode("utf-8")
    if len(spec) > 0xFFFF:
        raise RecordFormatError("weight spec too long to serialize")
    moves01 = ((np.asarray(record.moves, dtype=np.int8) + 1) // 2).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, record.master_seed,
                            record.stream_index, len(spec)))
        fh.write(spec)
        fh.write(_COUNT.pack(moves01.size))
        fh.write(moves01.tobytes())


def read_record(path: str | Path) -> TrajectoryRecord:
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        raise RecordFormatError(f"{path}: truncated header")
    magic, version, seed, index, spec_len = _HEAD.unpack_from(raw, 0)
    if magic != MAGIC:
        raise RecordFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise RecordFormatError(f"{path}: unsupported version {version}")
    off = _HEAD.size
    if len(raw) < off + spec_len + _COUNT.size:
        raise RecordFormatError(f"{path}: truncated weight spec")
    spec = raw[off:off + spec_len].decode("utf-8")
    off += spec_len
    (count,) = _COUNT.unpack_from(raw, off)
    off += _COUNT.size
    body = raw[off:]
    if len(body) != count:
        raise RecordFormatError(f"{path}: expected {count} move bytes, found {len(body)}")
    moves01 = np.frombuffer(body, dtype=np.uint8)
    if moves01.size and moves01.max() > 1:
        raise RecordFormatError(f"{path}: move bytes must be 0 or 1")
    moves = (moves01.astype(np.int8) * 2 - 1)
    return TrajectoryRecord(moves=moves, master_seed=seed, stream_index=index,
                            weight_spec=spec)
