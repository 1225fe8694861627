"""Binary correspondence blob (.c3c): the per-pair on-disk record format.

Layout, little-endian: magic ``C3DS``, u32 version (currently 1), u64 record
count, then the payload of fixed 28-byte records (u32 image-local index,
f32 photo_x, photo_y, plan_x, plan_y, u64 point3d_id), then a u32 CRC-32 of
the payload. Coordinates are stored as f32; normalized coordinates are never
stored.
"""

import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import ChecksumFailure, VersionMismatch

MAGIC = b"C3DS"
VERSION = 1

RECORD_DTYPE = np.dtype([
    ("index", "<u4"),
    ("photo_x", "<f4"),
    ("photo_y", "<f4"),
    ("plan_x", "<f4"),
    ("plan_y", "<f4"),
    ("point3d_id", "<u8"),
])
_HEADER = struct.Struct("<4sIQ")


def write_records(path, photo_xy, plan_xy, point3d_ids, local_indices) -> None:
    records = np.empty(len(photo_xy), dtype=RECORD_DTYPE)
    records["index"] = np.asarray(local_indices, dtype=np.uint32)
    records["photo_x"] = photo_xy[:, 0]
    records["photo_y"] = photo_xy[:, 1]
    records["plan_x"] = plan_xy[:, 0]
    records["plan_y"] = plan_xy[:, 1]
    records["point3d_id"] = np.asarray(point3d_ids, dtype=np.uint64)
    payload = records.tobytes()
    blob = _HEADER.pack(MAGIC, VERSION, len(records)) + payload
    blob += struct.pack("<I", zlib.crc32(payload))
    Path(path).write_bytes(blob)


def read_records(path):
    """Returns (photo_xy, plan_xy, point3d_ids, local_indices) as float64/int64."""
    buf = Path(path).read_bytes()
    if len(buf) < _HEADER.size:
        raise ChecksumFailure(f"{path}: file shorter than the header")
    magic, version, count = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise VersionMismatch(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"{path}: version {version}, expected {VERSION}")
    payload_size = count * RECORD_DTYPE.itemsize
    expected = _HEADER.size + payload_size + 4
    if len(buf) != expected:
        raise ChecksumFailure(
            f"{path}: expected {expected} bytes for {count} records, found {len(buf)}"
        )
    payload = buf[_HEADER.size:_HEADER.size + payload_size]
    (crc,) = struct.unpack_from("<I", buf, _HEADER.size + payload_size)
    if zlib.crc32(payload) != crc:
        raise ChecksumFailure(f"{path}: CRC mismatch")
    records = np.frombuffer(payload, dtype=RECORD_DTYPE)
    photo_xy = np.column_stack([records["photo_x"], records["photo_y"]]).astype(np.float64)
    plan_xy = np.column_stack([records["plan_x"], records["plan_y"]]).astype(np.float64)
    return (
        photo_xy,
        plan_xy,
        records["point3d_id"].astype(np.int64),
        records["index"].astype(np.int64),
    )


def read_record_count(path) -> int:
    """Record count from the header alone; cheap for statistics scans."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise ChecksumFailure(f"{path}: file shorter than the header")
    magic, version, count = _HEADER.unpack(head)
    if magic != MAGIC:
        raise VersionMismatch(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"{path}: version {version}, expected {VERSION}")
    return count
