"""Reader/writer for SfM sparse models (cameras, images, points3D).

Both the binary and the text form are supported. The binary layout is
little-endian throughout:

* ``cameras.bin``   -- u64 count, then per camera: u32 camera_id, u32
  model_id, u64 width, u64 height, f64 x arity params.
* ``images.bin``    -- u64 count, then per image: u32 image_id, f64x4 qvec
  (w, x, y, z), f64x3 tvec, u32 camera_id, NUL-terminated name, u64
  observation count, then per observation f64 x, f64 y, u64 point3d_id
  (``0xFFFFFFFFFFFFFFFF`` when the observation has no 3D point).
* ``points3D.bin``  -- u64 count, then per point: u64 point3d_id, f64x3
  xyz, u8x3 rgb, f64 error, u64 track length, then per track element
  u32 image_id, u32 observation index.

The text form keeps one record per line with whitespace-separated fields in
the same order (counts included); ``#`` starts a comment line, and a missing
3D point is written as ``-1``. Reals are serialized with 17 significant
digits so a text round-trip reproduces every float64 exactly.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    IntegrityError,
    MalformedText,
    MissingFile,
    TruncatedFile,
    UnsupportedModelInText,
)

# Models the projection code understands. Ids 5..10 are recognized on disk
# (their parameter counts are fixed by the format) but flagged unsupported.
SUPPORTED_CAMERA_MODELS = {
    0: ("SIMPLE_PINHOLE", 3),
    1: ("PINHOLE", 4),
    2: ("SIMPLE_RADIAL", 4),
    3: ("RADIAL", 5),
    4: ("OPENCV", 8),
}
_PARSEABLE_CAMERA_MODELS = {
    **SUPPORTED_CAMERA_MODELS,
    5: ("OPENCV_FISHEYE", 8),
    6: ("FULL_OPENCV", 12),
    7: ("FOV", 5),
    8: ("SIMPLE_RADIAL_FISHEYE", 4),
    9: ("RADIAL_FISHEYE", 5),
    10: ("THIN_PRISM_FISHEYE", 12),
}
_MODEL_NAME_TO_ID = {name: mid for mid, (name, _) in _PARSEABLE_CAMERA_MODELS.items()}

NO_POINT3D = -1
_NO_POINT3D_U64 = 0xFFFFFFFFFFFFFFFF

# qvec handling at parse time: below _QVEC_KEEP_TOL the stored values are kept
# bit-for-bit, up to _QVEC_RENORM_TOL they are renormalized, beyond that the
# file is considered corrupt rather than merely rounded.
_QVEC_KEEP_TOL = 1e-6
_QVEC_RENORM_TOL = 1e-3


class CameraIntrinsics(NamedTuple):
    camera_id: int
    model_id: int
    width: int
    height: int
    params: np.ndarray  # float64, length fixed by model_id

    @property
    def model_name(self) -> str:
        if self.model_id in SUPPORTED_CAMERA_MODELS:
            return SUPPORTED_CAMERA_MODELS[self.model_id][0]
        return "UNSUPPORTED"

    @property
    def is_supported(self) -> bool:
        return self.model_id in SUPPORTED_CAMERA_MODELS


class ImagePose(NamedTuple):
    image_id: int
    qvec: np.ndarray  # (4,) float64, (w, x, y, z), unit norm after parsing
    tvec: np.ndarray  # (3,) float64
    camera_id: int
    name: str
    xys: np.ndarray  # (N, 2) float64 keypoint observations
    point3d_ids: np.ndarray  # (N,) int64, NO_POINT3D where unmatched


class ScenePoint(NamedTuple):
    point3d_id: int
    xyz: np.ndarray  # (3,) float64
    rgb: np.ndarray  # (3,) uint8
    error: float  # reprojection error, pixels
    track: np.ndarray  # (K, 2) int64 rows of (image_id, observation index)


@dataclass
class SparseModel:
    cameras: dict = field(default_factory=dict)  # camera_id -> CameraIntrinsics
    images: dict = field(default_factory=dict)  # image_id -> ImagePose
    points: dict = field(default_factory=dict)  # point3d_id -> ScenePoint

    def num_observations(self) -> int:
        return sum(len(img.xys) for img in self.images.values())


_BIN_NAMES = {"cameras": "cameras.bin", "images": "images.bin", "points": "points3D.bin"}
_TXT_NAMES = {"cameras": "cameras.txt", "images": "images.txt", "points": "points3D.txt"}


def _camera_arity(model_id, where):
    info = _PARSEABLE_CAMERA_MODELS.get(model_id)
    if info is None:
        raise TruncatedFile(
            f"{where}: unknown camera model id {model_id}; parameter count "
            "is undecodable"
        )
    return info[1]


# ------------------------------------------------------------------ validation

def validate_model(model: SparseModel) -> None:
    """Check every invariant; raise IntegrityError naming the offender."""
    for cam in model.cameras.values():
        if cam.width <= 0 or cam.height <= 0:
            raise IntegrityError(f"camera {cam.camera_id}: non-positive dimensions")
        if cam.is_supported:
            name, arity = SUPPORTED_CAMERA_MODELS[cam.model_id]
            if len(cam.params) != arity:
                raise IntegrityError(
                    f"camera {cam.camera_id}: {name} expects {arity} params, "
                    f"got {len(cam.params)}"
                )
            n_focal = 1 if name in ("SIMPLE_PINHOLE", "SIMPLE_RADIAL", "RADIAL") else 2
            if np.any(cam.params[:n_focal] <= 0):
                raise IntegrityError(f"camera {cam.camera_id}: non-positive focal length")

    known_points = np.sort(np.fromiter(model.points.keys(), dtype=np.int64,
                                       count=len(model.points)))
    for img in model.images.values():
        if img.camera_id not in model.cameras:
            raise IntegrityError(
                f"image {img.image_id}: dangling camera_id {img.camera_id}"
            )
        norm = float(np.linalg.norm(img.qvec))
        if abs(norm - 1.0) > _QVEC_KEEP_TOL:
            raise IntegrityError(
                f"image {img.image_id}: quaternion norm {norm} not unit"
            )
        referenced = img.point3d_ids[img.point3d_ids != NO_POINT3D]
        if len(referenced):
            hit = np.searchsorted(known_points, referenced)
            hit = np.clip(hit, 0, max(len(known_points) - 1, 0))
            dangling = (
                referenced[known_points[hit] != referenced]
                if len(known_points)
                else referenced
            )
            if len(dangling):
                raise IntegrityError(
                    f"image {img.image_id}: observation references missing "
                    f"point3d_id {int(dangling[0])}"
                )

    # Track elements, grouped per image so the id-at-index check vectorizes.
    owners, track_imgs, track_idxs = [], [], []
    for pt in model.points.values():
        if pt.error < 0:
            raise IntegrityError(f"point {pt.point3d_id}: negative error")
        if len(pt.track):
            owners.append(np.full(len(pt.track), pt.point3d_id, dtype=np.int64))
            track_imgs.append(pt.track[:, 0])
            track_idxs.append(pt.track[:, 1])
    if not owners:
        return
    owners = np.concatenate(owners)
    track_imgs = np.concatenate(track_imgs)
    track_idxs = np.concatenate(track_idxs)
    order = np.argsort(track_imgs, kind="stable")
    owners, track_imgs, track_idxs = owners[order], track_imgs[order], track_idxs[order]
    uniq, starts = np.unique(track_imgs, return_index=True)
    bounds = list(starts[1:]) + [len(track_imgs)]
    for image_id, start, stop in zip(uniq, starts, bounds):
        img = model.images.get(int(image_id))
        if img is None:
            raise IntegrityError(
                f"point {int(owners[start])}: track references missing image "
                f"{int(image_id)}"
            )
        idxs = track_idxs[start:stop]
        bad = (idxs < 0) | (idxs >= len(img.point3d_ids))
        if bad.any():
            k = start + int(np.flatnonzero(bad)[0])
            raise IntegrityError(
                f"point {int(owners[k])}: track observation index "
                f"{int(track_idxs[k])} out of range for image {int(image_id)}"
            )
        stored = img.point3d_ids[idxs]
        mismatch = stored != owners[start:stop]
        if mismatch.any():
            k = start + int(np.flatnonzero(mismatch)[0])
            raise IntegrityError(
                f"point {int(owners[k])}: image {int(image_id)} observation "
                f"{int(track_idxs[k])} stores point3d_id "
                f"{int(img.point3d_ids[int(track_idxs[k])])}"
            )


def _normalize_qvec(qvec, image_id):
    norm = float(np.linalg.norm(qvec))
    if abs(norm - 1.0) > _QVEC_RENORM_TOL:
        raise IntegrityError(
            f"image {image_id}: quaternion norm {norm} deviates beyond "
            f"{_QVEC_RENORM_TOL}; file looks corrupt"
        )
    if abs(norm - 1.0) > _QVEC_KEEP_TOL:
        return qvec / norm
    return qvec


# -------------------------------------------------------------- binary reading

class _Reader:
    """Cursor over a fully loaded binary file."""

    def __init__(self, path: Path):
        self.path = path
        self.buf = path.read_bytes()
        self.pos = 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise TruncatedFile(
                f"{self.path}: needed {size} bytes at offset {self.pos}, "
                f"file has {len(self.buf)}"
            )
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out

    def take_array(self, dtype, count):
        size = dtype.itemsize * count
        if self.pos + size > len(self.buf):
            raise TruncatedFile(
                f"{self.path}: needed {size} bytes at offset {self.pos}, "
                f"file has {len(self.buf)}"
            )
        out = np.frombuffer(self.buf, dtype=dtype, count=count, offset=self.pos)
        self.pos += size
        return out

    def take_cstring(self):
        end = self.buf.find(b"\x00", self.pos)
        if end < 0:
            raise TruncatedFile(f"{self.path}: unterminated string at offset {self.pos}")
        out = self.buf[self.pos:end].decode("utf-8")
        self.pos = end + 1
        return out

    def finish(self):
        if self.pos != len(self.buf):
            raise TruncatedFile(
                f"{self.path}: {len(self.buf) - self.pos} trailing bytes after "
                "the last record"
            )


_OBS_DTYPE = np.dtype([("x", "<f8"), ("y", "<f8"), ("p3d", "<u8")])
_TRACK_DTYPE = np.dtype("<u4")


def _read_cameras_binary(path):
    r = _Reader(path)
    (count,) = r.take("<Q")
    cameras = {}
    for _ in range(count):
        camera_id, model_id, width, height = r.take("<IIQQ")
        arity = _camera_arity(model_id, path)
        params = r.take_array(np.dtype("<f8"), arity).astype(np.float64)
        if camera_id in cameras:
            raise IntegrityError(f"{path}: duplicate camera_id {camera_id}")
        cameras[camera_id] = CameraIntrinsics(camera_id, model_id, width, height, params)
    r.finish()
    return cameras


def _read_images_binary(path):
    r = _Reader(path)
    (count,) = r.take("<Q")
    images = {}
    for _ in range(count):
        (image_id,) = r.take("<I")
        qvec = np.array(r.take("<dddd"), dtype=np.float64)
        tvec = np.array(r.take("<ddd"), dtype=np.float64)
        (camera_id,) = r.take("<I")
        name = r.take_cstring()
        (n_obs,) = r.take("<Q")
        obs = r.take_array(_OBS_DTYPE, n_obs)
        xys = np.column_stack([obs["x"], obs["y"]]) if n_obs else np.empty((0, 2))
        point3d_ids = obs["p3d"].astype(np.int64)  # sentinel wraps to -1
        if image_id in images:
            raise IntegrityError(f"{path}: duplicate image_id {image_id}")
        images[image_id] = ImagePose(
            image_id, _normalize_qvec(qvec, image_id), tvec, camera_id, name,
            np.ascontiguousarray(xys), point3d_ids,
        )
    r.finish()
    return images


def _read_points_binary(path):
    r = _Reader(path)
    (count,) = r.take("<Q")
    points = {}
    for _ in range(count):
        (point3d_id,) = r.take("<Q")
        xyz = np.array(r.take("<ddd"), dtype=np.float64)
        rgb = np.array(r.take("<BBB"), dtype=np.uint8)
        (error,) = r.take("<d")
        (track_len,) = r.take("<Q")
        track = (
            r.take_array(_TRACK_DTYPE, 2 * track_len)
            .astype(np.int64)
            .reshape(-1, 2)
        )
        if point3d_id in points:
            raise IntegrityError(f"{path}: duplicate point3d_id {point3d_id}")
        points[point3d_id] = ScenePoint(point3d_id, xyz, rgb, float(error), track)
    r.finish()
    return points


# ---------------------------------------------------------------- text reading

def _iter_records(path):
    """Yield (line_number, line, tokens) for non-comment lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, line, line.split()


def _token_columns(line, tokens):
    columns = []
    col = 0
    for tok in tokens:
        col = line.index(tok, col)
        columns.append(col + 1)
        col += len(tok)
    return columns


class _Fields:
    """Sequential typed access to one record's tokens with error context."""

    def __init__(self, path, lineno, line, tokens):
        self.path, self.lineno = path, lineno
        self.tokens, self.columns = tokens, _token_columns(line, tokens)
        self.i = 0

    def _next(self, kind, convert):
        if self.i >= len(self.tokens):
            raise MalformedText(
                f"expected {kind}, line ended after {len(self.tokens)} fields",
                self.path, self.lineno,
                self.columns[-1] + len(self.tokens[-1]) if self.tokens else 1,
            )
        tok, col = self.tokens[self.i], self.columns[self.i]
        try:
            value = convert(tok)
        except ValueError:
            raise MalformedText(
                f"expected {kind}, got {tok!r}", self.path, self.lineno, col
            ) from None
        self.i += 1
        return value

    def int(self, kind="integer"):
        return self._next(kind, int)

    def float(self, kind="real"):
        return self._next(kind, float)

    def str(self, kind="string"):
        return self._next(kind, str)

    def done(self):
        if self.i != len(self.tokens):
            raise MalformedText(
                f"{len(self.tokens) - self.i} extra fields",
                self.path, self.lineno, self.columns[self.i],
            )


def _diagnose_camera_record(path, lineno, line, tokens):
    """Slow, per-field re-parse of one bad record for a precise error."""
    f = _Fields(path, lineno, line, tokens)
    f.int("camera_id")
    name = f.str("model name")
    model_id = _MODEL_NAME_TO_ID.get(name)
    if model_id is None:
        raise MalformedText(f"unknown camera model {name!r}", path, lineno,
                            f.columns[1])
    f.int("width")
    f.int("height")
    for _ in range(_PARSEABLE_CAMERA_MODELS[model_id][1]):
        f.float("param")
    f.done()
    raise MalformedText("invalid camera record", path, lineno, 1)


def _read_cameras_text(path):
    cameras = {}
    for lineno, line, tokens in _iter_records(path):
        try:
            camera_id = int(tokens[0])
            model_id = _MODEL_NAME_TO_ID[tokens[1]]
            width, height = int(tokens[2]), int(tokens[3])
            arity = _PARSEABLE_CAMERA_MODELS[model_id][1]
            if len(tokens) != 4 + arity:
                raise ValueError
            params = np.array(tokens[4:], dtype=np.float64)
        except (ValueError, KeyError, IndexError):
            _diagnose_camera_record(path, lineno, line, tokens)
        if camera_id in cameras:
            raise IntegrityError(f"{path}: duplicate camera_id {camera_id}")
        cameras[camera_id] = CameraIntrinsics(camera_id, model_id, width, height, params)
    return cameras


def _diagnose_image_record(path, lineno, line, tokens):
    f = _Fields(path, lineno, line, tokens)
    f.int("image_id")
    for _ in range(4):
        f.float("qvec")
    for _ in range(3):
        f.float("tvec")
    f.int("camera_id")
    f.str("name")
    n_obs = f.int("observation count")
    for _ in range(n_obs):
        f.float("observation x")
        f.float("observation y")
        f.int("point3d_id")
    f.done()
    raise MalformedText("invalid image record", path, lineno, 1)


def _read_images_text(path):
    images = {}
    for lineno, line, tokens in _iter_records(path):
        try:
            image_id = int(tokens[0])
            qvec = np.array(tokens[1:5], dtype=np.float64)
            tvec = np.array(tokens[5:8], dtype=np.float64)
            if len(qvec) != 4 or len(tvec) != 3:
                raise ValueError
            camera_id = int(tokens[8])
            name = tokens[9]
            n_obs = int(tokens[10])
            if len(tokens) != 11 + 3 * n_obs:
                raise ValueError
            xys = np.column_stack([
                np.array(tokens[11::3], dtype=np.float64),
                np.array(tokens[12::3], dtype=np.float64),
            ])
            point3d_ids = np.array(tokens[13::3], dtype=np.int64)
        except (ValueError, OverflowError, IndexError):
            _diagnose_image_record(path, lineno, line, tokens)
        if image_id in images:
            raise IntegrityError(f"{path}: duplicate image_id {image_id}")
        images[image_id] = ImagePose(
            image_id, _normalize_qvec(qvec, image_id), tvec, camera_id, name,
            xys, point3d_ids,
        )
    return images


def _diagnose_point_record(path, lineno, line, tokens):
    f = _Fields(path, lineno, line, tokens)
    f.int("point3d_id")
    for _ in range(3):
        f.float("xyz")
    for _ in range(3):
        f.int("rgb")
    f.float("error")
    track_len = f.int("track length")
    for _ in range(track_len):
        f.int("track image_id")
        f.int("track observation index")
    f.done()
    raise MalformedText("invalid point record", path, lineno, 1)


def _read_points_text(path):
    points = {}
    for lineno, line, tokens in _iter_records(path):
        try:
            point3d_id = int(tokens[0])
            xyz = np.array(tokens[1:4], dtype=np.float64)
            rgb_i = [int(tokens[4]), int(tokens[5]), int(tokens[6])]
            error = float(tokens[7])
            track_len = int(tokens[8])
            if len(xyz) != 3 or len(tokens) != 9 + 2 * track_len:
                raise ValueError
            track = np.array(tokens[9:], dtype=np.int64).reshape(-1, 2)
        except (ValueError, OverflowError, IndexError):
            _diagnose_point_record(path, lineno, line, tokens)
        if point3d_id in points:
            raise IntegrityError(f"{path}: duplicate point3d_id {point3d_id}")
        points[point3d_id] = ScenePoint(point3d_id, xyz,
                                        np.array(rgb_i, dtype=np.uint8),
                                        error, track)
    return points


# -------------------------------------------------------------------- writing

def _fmt(x: float) -> str:
    return format(x, ".17g")


def _write_cameras_binary(cameras, path):
    chunks = [struct.pack("<Q", len(cameras))]
    for cam in cameras.values():
        chunks.append(
            struct.pack("<IIQQ", cam.camera_id, cam.model_id, cam.width, cam.height)
        )
        chunks.append(np.asarray(cam.params, dtype="<f8").tobytes())
    path.write_bytes(b"".join(chunks))


def _write_images_binary(images, path):
    chunks = [struct.pack("<Q", len(images))]
    for img in images.values():
        chunks.append(struct.pack("<I", img.image_id))
        chunks.append(np.asarray(img.qvec, dtype="<f8").tobytes())
        chunks.append(np.asarray(img.tvec, dtype="<f8").tobytes())
        chunks.append(struct.pack("<I", img.camera_id))
        chunks.append(img.name.encode("utf-8") + b"\x00")
        chunks.append(struct.pack("<Q", len(img.xys)))
        obs = np.empty(len(img.xys), dtype=_OBS_DTYPE)
        obs["x"] = img.xys[:, 0]
        obs["y"] = img.xys[:, 1]
        obs["p3d"] = img.point3d_ids.astype(np.uint64)  # -1 wraps to sentinel
        chunks.append(obs.tobytes())
    path.write_bytes(b"".join(chunks))


def _write_points_binary(points, path):
    chunks = [struct.pack("<Q", len(points))]
    for pt in points.values():
        chunks.append(struct.pack("<Q", pt.point3d_id))
        chunks.append(np.asarray(pt.xyz, dtype="<f8").tobytes())
        chunks.append(np.asarray(pt.rgb, dtype=np.uint8).tobytes())
        chunks.append(struct.pack("<dQ", pt.error, len(pt.track)))
        chunks.append(np.asarray(pt.track, dtype="<u4").tobytes())
    path.write_bytes(b"".join(chunks))


def _write_cameras_text(cameras, path):
    lines = ["# camera_id model width height params[]"]
    for cam in cameras.values():
        if not cam.is_supported:
            raise UnsupportedModelInText(
                f"camera {cam.camera_id}: model id {cam.model_id} has no text name"
            )
        fields = [str(cam.camera_id), cam.model_name, str(cam.width), str(cam.height)]
        fields += [_fmt(p) for p in cam.params]
        lines.append(" ".join(fields))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_images_text(images, path):
    lines = ["# image_id qw qx qy qz tx ty tz camera_id name n_obs (x y point3d_id)[]"]
    for img in images.values():
        if any(ch.isspace() for ch in img.name):
            raise UnsupportedModelInText(
                f"image {img.image_id}: name {img.name!r} contains whitespace"
            )
        fields = [str(img.image_id)]
        fields += [_fmt(v) for v in img.qvec]
        fields += [_fmt(v) for v in img.tvec]
        fields += [str(img.camera_id), img.name, str(len(img.xys))]
        for (x, y), pid in zip(img.xys, img.point3d_ids):
            fields += [_fmt(x), _fmt(y), str(int(pid))]
        lines.append(" ".join(fields))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_points_text(points, path):
    lines = ["# point3d_id x y z r g b error track_len (image_id obs_idx)[]"]
    for pt in points.values():
        fields = [str(pt.point3d_id)]
        fields += [_fmt(v) for v in pt.xyz]
        fields += [str(int(v)) for v in pt.rgb]
        fields += [_fmt(pt.error), str(len(pt.track))]
        for image_id, obs_idx in pt.track:
            fields += [str(int(image_id)), str(int(obs_idx))]
        lines.append(" ".join(fields))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ----------------------------------------------------------------- public API

def detect_format(dir_path) -> str:
    dir_path = Path(dir_path)
    if (dir_path / _BIN_NAMES["cameras"]).exists():
        return "binary"
    if (dir_path / _TXT_NAMES["cameras"]).exists():
        return "text"
    raise MissingFile(f"{dir_path}: neither cameras.bin nor cameras.txt present")


def parse_model(dir_path, format: str = "auto") -> SparseModel:
    """Load and validate a sparse model directory.

    ``format`` is one of ``binary``, ``text`` or ``auto`` (detect from the
    files present). Raises MissingFile, TruncatedFile, MalformedText or
    IntegrityError.
    """
    dir_path = Path(dir_path)
    if format == "auto":
        format = detect_format(dir_path)
    if format not in ("binary", "text"):
        raise ValueError(f"unknown format {format!r}")
    names = _BIN_NAMES if format == "binary" else _TXT_NAMES
    paths = {}
    for key, name in names.items():
        p = dir_path / name
        if not p.exists():
            raise MissingFile(str(p))
        paths[key] = p

    if format == "binary":
        cameras = _read_cameras_binary(paths["cameras"])
        images = _read_images_binary(paths["images"])
        points = _read_points_binary(paths["points"])
    else:
        cameras = _read_cameras_text(paths["cameras"])
        images = _read_images_text(paths["images"])
        points = _read_points_text(paths["points"])

    model = SparseModel(cameras, images, points)
    validate_model(model)
    return model


def write_model(model: SparseModel, dir_path, format: str = "binary") -> None:
    """Write all three model files; the model must pass validation first."""
    if format not in ("binary", "text"):
        raise ValueError(f"unknown format {format!r}")
    validate_model(model)
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    if format == "binary":
        _write_cameras_binary(model.cameras, dir_path / _BIN_NAMES["cameras"])
        _write_images_binary(model.images, dir_path / _BIN_NAMES["images"])
        _write_points_binary(model.points, dir_path / _BIN_NAMES["points"])
    else:
        _write_cameras_text(model.cameras, dir_path / _TXT_NAMES["cameras"])
        _write_images_text(model.images, dir_path / _TXT_NAMES["images"])
        _write_points_text(model.points, dir_path / _TXT_NAMES["points"])


def models_equal(a: SparseModel, b: SparseModel, float_tol: float = 0.0) -> bool:
    """Field-for-field equality; ``float_tol`` loosens real-valued fields."""

    def feq(x, y):
        x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
        if x.shape != y.shape:
            return False
        if float_tol == 0.0:
            return np.array_equal(x, y)
        return bool(np.allclose(x, y, rtol=0.0, atol=float_tol))

    if set(a.cameras) != set(b.cameras):
        return False
    for cid, ca in a.cameras.items():
        cb = b.cameras[cid]
        if (ca.model_id, ca.width, ca.height) != (cb.model_id, cb.width, cb.height):
            return False
        if not feq(ca.params, cb.params):
            return False

    if set(a.images) != set(b.images):
        return False
    for iid, ia in a.images.items():
        ib = b.images[iid]
        if (ia.camera_id, ia.name) != (ib.camera_id, ib.name):
            return False
        if not (feq(ia.qvec, ib.qvec) and feq(ia.tvec, ib.tvec) and feq(ia.xys, ib.xys)):
            return False
        if not np.array_equal(ia.point3d_ids, ib.point3d_ids):
            return False

    if set(a.points) != set(b.points):
        return False
    ids = sorted(a.points)
    if not ids:
        return True
    pa = [a.points[i] for i in ids]
    pb = [b.points[i] for i in ids]
    if not feq(np.stack([p.xyz for p in pa]), np.stack([p.xyz for p in pb])):
        return False
    if not feq([p.error for p in pa], [p.error for p in pb]):
        return False
    if not np.array_equal(np.stack([p.rgb for p in pa]), np.stack([p.rgb for p in pb])):
        return False
    len_a = [len(p.track) for p in pa]
    if len_a != [len(p.track) for p in pb]:
        return False
    if sum(len_a):
        tracks_a = np.concatenate([p.track for p in pa if len(p.track)])
        tracks_b = np.concatenate([p.track for p in pb if len(p.track)])
        if not np.array_equal(tracks_a, tracks_b):
            return False
    return True
