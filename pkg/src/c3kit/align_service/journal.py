"""Append-only journal of alignment records with optimistic versioning.

Each record is self-delimiting: u32 body length, u32 CRC-32 of the body,
then a UTF-8 JSON body. Replay walks the file until the first incomplete or
corrupt record (a crashed write) and keeps the last complete record per
(scene, component, plan) key, so restarting after any prefix of writes
serves exactly that prefix.
"""

import json
import os
import struct
import threading
import time
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError, VersionConflict
from ..geometry import SimilarityTransform2D

_FRAME = struct.Struct("<II")


@dataclass(frozen=True)
class AlignmentRecord:
    scene_id: str
    component_id: str
    plan_id: str
    similarity: SimilarityTransform2D
    rectification: np.ndarray = None  # optional (3, 3) override
    annotator: str = ""
    timestamp: float = 0.0  # UTC seconds
    version: int = 0

    @property
    def key(self):
        return (self.scene_id, self.component_id, self.plan_id)

    def to_dict(self):
        return {
            "scene_id": self.scene_id,
            "component_id": self.component_id,
            "plan_id": self.plan_id,
            "similarity": {
                "scale": self.similarity.scale,
                "theta": self.similarity.theta,
                "tx": self.similarity.tx,
                "ty": self.similarity.ty,
            },
            "rectification": (
                None if self.rectification is None
                else [float(v) for v in np.asarray(self.rectification).ravel()]
            ),
            "annotator": self.annotator,
            "timestamp": self.timestamp,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d):
        sim = d["similarity"]
        rect = d.get("rectification")
        return cls(
            scene_id=d["scene_id"],
            component_id=d["component_id"],
            plan_id=d["plan_id"],
            similarity=SimilarityTransform2D(sim["scale"], sim["theta"], sim["tx"], sim["ty"]),
            rectification=None if rect is None else np.asarray(rect).reshape(3, 3),
            annotator=d.get("annotator", ""),
            timestamp=d.get("timestamp", 0.0),
            version=d["version"],
        )


class AlignmentJournal:
    """Crash-safe store of the latest alignment per (scene, component, plan)."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._latest = {}
        self._replay()

    def _replay(self):
        self._latest = {}
        if not self.path.exists():
            return
        buf = self.path.read_bytes()
        pos = 0
        while pos + _FRAME.size <= len(buf):
            length, crc = _FRAME.unpack_from(buf, pos)
            body = buf[pos + _FRAME.size: pos + _FRAME.size + length]
            if len(body) < length or zlib.crc32(body) != crc:
                break  # torn tail from an interrupted write
            try:
                record = AlignmentRecord.from_dict(json.loads(body.decode("utf-8")))
            except (ValueError, KeyError):
                break
            self._latest[record.key] = record
            pos += _FRAME.size + length

    def keys(self):
        return sorted(self._latest)

    def latest(self, scene_id, component_id, plan_id):
        return self._latest.get((scene_id, component_id, plan_id))

    def records(self):
        return dict(self._latest)

    def put(self, scene_id, component_id, plan_id, similarity,
            rectification=None, annotator="", expected_version=None,
            timestamp=None) -> int:
        """Append a new version; enforces optimistic concurrency when
        ``expected_version`` is given. Returns the stored version."""
        if not isinstance(similarity, SimilarityTransform2D):
            raise ValidationError("similarity must be a SimilarityTransform2D")
        if rectification is not None:
            r = np.asarray(rectification, dtype=np.float64)
            if r.shape != (3, 3) or np.abs(r @ r.T - np.eye(3)).max() > 1e-6 \
                    or abs(np.linalg.det(r) - 1.0) > 1e-6:
                raise ValidationError("rectification override must be a rotation matrix")
            rectification = r
        with self._lock:
            key = (scene_id, component_id, plan_id)
            current = self._latest.get(key)
            current_version = 0 if current is None else current.version
            if expected_version is not None and expected_version != current_version:
                raise VersionConflict(
                    f"{key}: expected version {expected_version}, "
                    f"stored is {current_version}",
                    current_version=current_version,
                )
            record = AlignmentRecord(
                scene_id=scene_id,
                component_id=component_id,
                plan_id=plan_id,
                similarity=similarity,
                rectification=rectification,
                annotator=annotator,
                timestamp=time.time() if timestamp is None else timestamp,
                version=current_version + 1,
            )
            body = json.dumps(record.to_dict(), sort_keys=True).encode("utf-8")
            frame = _FRAME.pack(len(body), zlib.crc32(body)) + body
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "ab") as fh:
                fh.write(frame)
                fh.flush()
                os.fsync(fh.fileno())
            self._latest[key] = record
            return record.version
