"""Prediction files: one per plan-photo pair, text (.c3p) or binary (.c3pr).

Text form: a header line ``C3P 1 <scene_id> <plan_id> <image_id>`` followed
by one record per line, ``u v x y [conf]``, with u, v in photo pixels and
x, y in normalized plan coordinates; blank lines and ``#`` comments are
ignored. Either every record carries a confidence or none does.

Binary form mirrors the dataset blob framing: magic ``C3PR``, u32 version 1,
NUL-terminated scene_id and plan_id, u64 image_id, u64 record count, payload
of f32 (u, v, x, y, conf) records with conf = NaN when absent, then a u32
CRC-32 of the payload.
"""

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChecksumFailure, MalformedText, VersionMismatch

TEXT_MAGIC = "C3P"
BINARY_MAGIC = b"C3PR"
VERSION = 1

_RECORD_DTYPE = np.dtype([
    ("u", "<f4"), ("v", "<f4"), ("x", "<f4"), ("y", "<f4"), ("conf", "<f4"),
])


@dataclass
class PredictionSet:
    """Per-pair predictions: plan locations (normalized) for photo queries.

    Predicted values outside [0, 1] are permitted (a prediction may miss the
    plan) but can be inspected through ``out_of_unit_mask``.
    """

    scene_id: str
    plan_id: str
    image_id: int
    query_xy: np.ndarray  # (N, 2) float64 photo pixels
    pred_norm: np.ndarray  # (N, 2) float64 normalized plan coordinates
    confidence: np.ndarray = None  # (N,) float64, or None

    def __post_init__(self):
        self.query_xy = np.asarray(self.query_xy, dtype=np.float64).reshape(-1, 2)
        self.pred_norm = np.asarray(self.pred_norm, dtype=np.float64).reshape(-1, 2)
        if self.confidence is not None:
            self.confidence = np.asarray(self.confidence, dtype=np.float64).reshape(-1)
            if len(self.confidence) != len(self.query_xy):
                raise ValueError("confidence length does not match queries")
            if np.any(self.confidence < 0):
                raise ValueError("confidences must be non-negative")
        if not np.all(np.isfinite(self.pred_norm)):
            raise ValueError("predicted coordinates must be finite")

    def __len__(self):
        return len(self.query_xy)

    @property
    def out_of_unit_mask(self) -> np.ndarray:
        return np.any((self.pred_norm < 0) | (self.pred_norm > 1), axis=1)

    def validate_queries(self, photo_size):
        w, h = photo_size
        bad = (
            (self.query_xy[:, 0] < 0) | (self.query_xy[:, 0] >= w)
            | (self.query_xy[:, 1] < 0) | (self.query_xy[:, 1] >= h)
        )
        if bad.any():
            raise ValueError(
                f"{int(bad.sum())} query coordinates outside the {w}x{h} photo"
            )


def write_predictions_text(pred: PredictionSet, path) -> None:
    lines = [f"{TEXT_MAGIC} {VERSION} {pred.scene_id} {pred.plan_id} {pred.image_id}"]
    for i in range(len(pred)):
        fields = [
            format(pred.query_xy[i, 0], ".17g"), format(pred.query_xy[i, 1], ".17g"),
            format(pred.pred_norm[i, 0], ".17g"), format(pred.pred_norm[i, 1], ".17g"),
        ]
        if pred.confidence is not None:
            fields.append(format(pred.confidence[i], ".17g"))
        lines.append(" ".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions_text(path) -> PredictionSet:
    path = Path(path)
    header = None
    rows = []
    widths = set()
    for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if header is None:
            if len(tokens) != 5 or tokens[0] != TEXT_MAGIC:
                raise MalformedText("expected header 'C3P 1 <scene> <plan> <image>'",
                                    path, lineno, 1)
            if int(tokens[1]) != VERSION:
                raise VersionMismatch(f"{path}: prediction version {tokens[1]}")
            header = (tokens[2], tokens[3], int(tokens[4]))
            continue
        if len(tokens) not in (4, 5):
            raise MalformedText(f"expected 4 or 5 fields, got {len(tokens)}",
                                path, lineno, 1)
        try:
            rows.append([float(t) for t in tokens])
        except ValueError:
            raise MalformedText("non-numeric field", path, lineno, 1) from None
        widths.add(len(tokens))
    if header is None:
        raise MalformedText("missing header line", path, 1, 1)
    if len(widths) > 1:
        raise MalformedText("mixed records with and without confidence", path, 1, 1)
    has_conf = widths == {5}
    arr = np.asarray(rows, dtype=np.float64).reshape(-1, 5 if has_conf else 4)
    return PredictionSet(
        scene_id=header[0],
        plan_id=header[1],
        image_id=header[2],
        query_xy=arr[:, 0:2],
        pred_norm=arr[:, 2:4],
        confidence=arr[:, 4] if has_conf else None,
    )


def write_predictions_binary(pred: PredictionSet, path) -> None:
    records = np.empty(len(pred), dtype=_RECORD_DTYPE)
    records["u"] = pred.query_xy[:, 0]
    records["v"] = pred.query_xy[:, 1]
    records["x"] = pred.pred_norm[:, 0]
    records["y"] = pred.pred_norm[:, 1]
    records["conf"] = pred.confidence if pred.confidence is not None else np.nan
    payload = records.tobytes()
    head = BINARY_MAGIC + struct.pack("<I", VERSION)
    head += pred.scene_id.encode("utf-8") + b"\x00"
    head += pred.plan_id.encode("utf-8") + b"\x00"
    head += struct.pack("<QQ", pred.image_id, len(records))
    Path(path).write_bytes(head + payload + struct.pack("<I", zlib.crc32(payload)))


def read_predictions_binary(path) -> PredictionSet:
    path = Path(path)
    buf = path.read_bytes()
    if buf[:4] != BINARY_MAGIC:
        raise VersionMismatch(f"{path}: bad magic {buf[:4]!r}")
    (version,) = struct.unpack_from("<I", buf, 4)
    if version != VERSION:
        raise VersionMismatch(f"{path}: version {version}")
    pos = 8
    end = buf.find(b"\x00", pos)
    scene_id = buf[pos:end].decode("utf-8")
    pos = end + 1
    end = buf.find(b"\x00", pos)
    plan_id = buf[pos:end].decode("utf-8")
    pos = end + 1
    image_id, count = struct.unpack_from("<QQ", buf, pos)
    pos += 16
    payload_size = count * _RECORD_DTYPE.itemsize
    if len(buf) != pos + payload_size + 4:
        raise ChecksumFailure(f"{path}: truncated payload")
    payload = buf[pos:pos + payload_size]
    (crc,) = struct.unpack_from("<I", buf, pos + payload_size)
    if zlib.crc32(payload) != crc:
        raise ChecksumFailure(f"{path}: CRC mismatch")
    records = np.frombuffer(payload, dtype=_RECORD_DTYPE)
    conf = records["conf"].astype(np.float64)
    has_conf = not np.isnan(conf).all() if count else False
    return PredictionSet(
        scene_id=scene_id,
        plan_id=plan_id,
        image_id=int(image_id),
        query_xy=np.column_stack([records["u"], records["v"]]).astype(np.float64),
        pred_norm=np.column_stack([records["x"], records["y"]]).astype(np.float64),
        confidence=conf if has_conf else None,
    )


def prediction_path(root, scene_id, plan_id, image_id) -> Path:
    """Existing prediction file for a pair, trying text then binary."""
    base = Path(root) / scene_id / plan_id
    for suffix in (".c3p", ".c3pr"):
        candidate = base / f"{image_id}{suffix}"
        if candidate.exists():
            return candidate
    return None


def load_predictions(path) -> PredictionSet:
    path = Path(path)
    if path.suffix == ".c3pr":
        return read_predictions_binary(path)
    return read_predictions_text(path)
