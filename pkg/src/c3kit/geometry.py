"""Rotations, camera projection, and the plan-registration transform family.

Conventions used throughout the package:

* Camera frame: x right, y down, z forward; a world point X maps to the
  camera frame as ``x_c = R X + t`` with R from the image quaternion.
* Pixel frames (photo and plan alike): origin at the top-left corner,
  x right, y down.
* A plan registration is rectification (rotate the world so +y is up),
  followed by dropping the up coordinate (keep (x, z)), followed by a 2D
  similarity in plan pixel space.
* ``theta`` is counter-clockwise in plan pixel space; headings are measured
  from +x toward +y and normalized to (-pi, pi].
"""

import math
from dataclasses import dataclass

import numpy as np

from .colmap_io import CameraIntrinsics, ImagePose, SparseModel
from .errors import (
    BehindCamera,
    DegenerateConfiguration,
    DegenerateUp,
    NonUnitQuaternion,
    UnsupportedCameraModel,
    VerticalCamera,
)


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    t = math.fmod(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    elif t > math.pi:
        t -= 2.0 * math.pi
    return t


@dataclass(frozen=True)
class SimilarityTransform2D:
    """p' = scale * R(theta) * p + (tx, ty) in plan pixel space."""

    scale: float
    theta: float
    tx: float
    ty: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @classmethod
    def identity(cls):
        return cls(1.0, 0.0, 0.0, 0.0)

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def matrix(self) -> np.ndarray:
        """3x3 homogeneous form, convenient for UI parity checks."""
        m = np.eye(3)
        m[:2, :2] = self.scale * self.rotation()
        m[:2, 2] = (self.tx, self.ty)
        return m


def apply_similarity(t: SimilarityTransform2D, p):
    """Apply to one point (2,) or a batch (N, 2)."""
    p = np.asarray(p, dtype=np.float64)
    return t.scale * p @ t.rotation().T + np.array([t.tx, t.ty])


def compose_similarity(a: SimilarityTransform2D, b: SimilarityTransform2D):
    """Transform equivalent to applying b first, then a."""
    tb = a.scale * a.rotation() @ np.array([b.tx, b.ty]) + np.array([a.tx, a.ty])
    return SimilarityTransform2D(a.scale * b.scale, a.theta + b.theta, tb[0], tb[1])


def invert_similarity(t: SimilarityTransform2D):
    inv_t = -(1.0 / t.scale) * t.rotation().T @ np.array([t.tx, t.ty])
    return SimilarityTransform2D(1.0 / t.scale, -t.theta, inv_t[0], inv_t[1])


@dataclass(frozen=True)
class PlanAlignment:
    """Registration of one reconstruction component onto one floor plan."""

    rectification: np.ndarray  # (3, 3) rotation, world -> up-is-+y frame
    similarity: SimilarityTransform2D
    plan_width: int
    plan_height: int
    component_id: str = ""
    plan_id: str = ""

    def __post_init__(self):
        r = np.asarray(self.rectification, dtype=np.float64)
        if r.shape != (3, 3):
            raise ValueError("rectification must be 3x3")
        if np.abs(r @ r.T - np.eye(3)).max() > 1e-9:
            raise ValueError("rectification is not orthonormal")
        if abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rectification must have determinant +1")
        if self.plan_width <= 0 or self.plan_height <= 0:
            raise ValueError("plan dimensions must be positive")
        object.__setattr__(self, "rectification", r)


@dataclass(frozen=True)
class PlanPose:
    """Camera position and viewing direction in plan pixel space."""

    position: tuple  # (x, y) plan pixels
    heading: float  # radians from +x toward +y, in (-pi, pi]
    normalized_position: tuple  # position / (plan_width, plan_height)


# ------------------------------------------------------------------ rotations

def qvec_to_matrix(qvec) -> np.ndarray:
    """Rotation matrix for a (w, x, y, z) unit quaternion."""
    q = np.asarray(qvec, dtype=np.float64)
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > 1e-6:
        raise NonUnitQuaternion(f"|qvec| = {norm}")
    w, x, y, z = q / norm
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def matrix_to_qvec(rot) -> np.ndarray:
    """Inverse of qvec_to_matrix; returns the w >= 0 representative."""
    r = np.asarray(rot, dtype=np.float64)
    rxx, ryx, rzx, rxy, ryy, rzy, rxz, ryz, rzz = r.flat
    k = np.array([
        [rxx - ryy - rzz, 0, 0, 0],
        [ryx + rxy, ryy - rxx - rzz, 0, 0],
        [rzx + rxz, rzy + ryz, rzz - rxx - ryy, 0],
        [ryz - rzy, rzx - rxz, rxy - ryx, rxx + ryy + rzz],
    ]) / 3.0
    eigvals, eigvecs = np.linalg.eigh(k)
    q = eigvecs[[3, 0, 1, 2], np.argmax(eigvals)]
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


# ----------------------------------------------------------------- projection

def _distort(model_id: int, params: np.ndarray, xn, yn):
    """Apply the model's distortion to normalized coordinates."""
    if model_id in (0, 1):  # SIMPLE_PINHOLE / PINHOLE
        return xn, yn
    r2 = xn * xn + yn * yn
    if model_id == 2:  # SIMPLE_RADIAL: k
        d = 1.0 + params[3] * r2
        return xn * d, yn * d
    if model_id == 3:  # RADIAL: k1, k2
        d = 1.0 + params[3] * r2 + params[4] * r2 * r2
        return xn * d, yn * d
    if model_id == 4:  # OPENCV: k1, k2, p1, p2
        k1, k2, p1, p2 = params[4:8]
        d = 1.0 + k1 * r2 + k2 * r2 * r2
        xd = xn * d + 2.0 * p1 * xn * yn + p2 * (r2 + 2.0 * xn * xn)
        yd = yn * d + p1 * (r2 + 2.0 * yn * yn) + 2.0 * p2 * xn * yn
        return xd, yd
    raise UnsupportedCameraModel(f"camera model id {model_id}")


def _focal_and_center(intr: CameraIntrinsics):
    if intr.model_id in (0, 2, 3):  # single focal length models
        f = intr.params[0]
        return f, f, intr.params[1], intr.params[2]
    if intr.model_id in (1, 4):
        return intr.params[0], intr.params[1], intr.params[2], intr.params[3]
    raise UnsupportedCameraModel(f"camera model id {intr.model_id}")


def project_points(intr: CameraIntrinsics, pose: ImagePose, pts):
    """Project (N, 3) world points; returns ((N, 2) pixels, (N,) in-front mask).

    Pixels for points behind the camera are NaN and masked out.
    """
    rot = qvec_to_matrix(pose.qvec)
    cam = np.asarray(pts, dtype=np.float64) @ rot.T + pose.tvec
    in_front = cam[:, 2] > 1e-9
    z = np.where(in_front, cam[:, 2], np.nan)
    xn = cam[:, 0] / z
    yn = cam[:, 1] / z
    xd, yd = _distort(intr.model_id, intr.params, xn, yn)
    fx, fy, cx, cy = _focal_and_center(intr)
    return np.column_stack([fx * xd + cx, fy * yd + cy]), in_front


def project_point(intr: CameraIntrinsics, pose: ImagePose, point):
    """Project one world point to photo pixels; the map x_i = T_i X."""
    xy, in_front = project_points(intr, pose, np.asarray(point)[None, :])
    if not in_front[0]:
        raise BehindCamera(f"point {np.asarray(point).tolist()} has z <= 1e-9")
    return float(xy[0, 0]), float(xy[0, 1])


# ------------------------------------------------------------- rectification

def estimate_up_axis(model: SparseModel) -> np.ndarray:
    """Up direction as the negated mean of the cameras' world-down axes."""
    if not model.images:
        raise DegenerateUp("model has no images")
    acc = np.zeros(3)
    for img in model.images.values():
        rot = qvec_to_matrix(img.qvec)
        acc += rot.T @ np.array([0.0, 1.0, 0.0])  # camera-down in world coords
    mean = acc / len(model.images)
    norm = float(np.linalg.norm(mean))
    if norm < 1e-6:
        raise DegenerateUp(f"camera-down directions cancel (norm {norm})")
    return -mean / norm


def up_axis_rectification(up) -> np.ndarray:
    """Deterministic rotation sending ``up`` to the +y axis."""
    y = np.asarray(up, dtype=np.float64)
    y = y / np.linalg.norm(y)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(float(y @ ref)) > 0.9:
        ref = np.array([0.0, 0.0, 1.0])
    x = ref - (ref @ y) * y
    x /= np.linalg.norm(x)
    z = np.cross(x, y)
    return np.stack([x, y, z])


def rectify_and_flatten(alignment: PlanAlignment, pts):
    """World point(s) to plan pixels; the map x_fp = T_pc->fp X."""
    p = np.asarray(pts, dtype=np.float64)
    single = p.ndim == 1
    rectified = np.atleast_2d(p) @ alignment.rectification.T
    flat = rectified[:, [0, 2]]  # drop the up coordinate
    out = apply_similarity(alignment.similarity, flat)
    return out[0] if single else out


# ------------------------------------------------------------ transform fits

def estimate_similarity(src, dst) -> SimilarityTransform2D:
    """Least-squares similarity taking ``src`` points onto ``dst`` points.

    Closed form: rotation and scale from the centered cross-covariance,
    translation from the centroids. Requires at least two pairs with
    non-coincident source points.
    """
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if src.shape != dst.shape:
        raise ValueError("source and target point counts differ")
    if len(src) < 2:
        raise DegenerateConfiguration("need at least two point pairs")
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    s = src - mu_s
    d = dst - mu_d
    denom = float((s * s).sum())
    if denom < 1e-18:
        raise DegenerateConfiguration("all source points coincide")
    a = float((s * d).sum())  # trace term of the 2x2 covariance
    b = float((s[:, 0] * d[:, 1] - s[:, 1] * d[:, 0]).sum())  # skew term
    theta = math.atan2(b, a)
    scale = math.hypot(a, b) / denom
    if scale <= 0:
        raise DegenerateConfiguration("target points collapse to a single point")
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    t = mu_d - scale * rot @ mu_s
    return SimilarityTransform2D(scale, theta, float(t[0]), float(t[1]))


def camera_plan_pose(alignment: PlanAlignment, pose: ImagePose) -> PlanPose:
    """Camera center and viewing direction mapped into the plan."""
    rot = qvec_to_matrix(pose.qvec)
    center = -rot.T @ pose.tvec
    position = rectify_and_flatten(alignment, center)

    forward_world = rot.T @ np.array([0.0, 0.0, 1.0])
    forward_rect = alignment.rectification @ forward_world
    f2d = forward_rect[[0, 2]]
    norm = float(np.linalg.norm(f2d))
    if norm < 1e-9:
        raise VerticalCamera(
            f"image {pose.image_id} looks along the up axis (|forward| = {norm})"
        )
    d = alignment.similarity.rotation() @ f2d  # scale/translation drop out
    heading = normalize_angle(math.atan2(d[1], d[0]))
    return PlanPose(
        position=(float(position[0]), float(position[1])),
        heading=heading,
        normalized_position=(
            float(position[0]) / alignment.plan_width,
            float(position[1]) / alignment.plan_height,
        ),
    )
