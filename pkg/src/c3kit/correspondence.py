"""Derivation of plan/photo pixel correspondences from an aligned model.

Every reconstructed point observed by a photo is projected into the photo
(x_i = T_i X) and into the floor plan (x_fp = T_pc->fp X); the surviving
(photo pixel, plan pixel) pairs plus the camera's plan pose form one
correspondence set per plan-photo pair.
"""

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .colmap_io import NO_POINT3D, SparseModel
from .errors import NoVisiblePoints, UnknownImage, VerticalCamera
from .geometry import (
    PlanAlignment,
    PlanPose,
    camera_plan_pose,
    normalize_angle,
    project_points,
    rectify_and_flatten,
)


class Correspondence(NamedTuple):
    photo_xy: tuple
    plan_xy: tuple
    photo_norm: tuple
    plan_norm: tuple
    point3d_id: int


@dataclass
class CorrespondenceSet:
    """Matched pixel pairs for one plan-photo pair.

    Normalized coordinates are always derived from the pixel values and the
    stored dimensions; they are never persisted separately.
    """

    scene_id: str
    plan_id: str
    image_id: int
    photo_xy: np.ndarray  # (N, 2) float64 photo pixels
    plan_xy: np.ndarray  # (N, 2) float64 plan pixels
    point3d_ids: np.ndarray  # (N,) int64 provenance
    photo_size: tuple  # (width, height)
    plan_size: tuple  # (width, height)
    plan_pose: PlanPose
    local_indices: np.ndarray = field(default=None)  # (N,) observation indices

    def __post_init__(self):
        self.photo_xy = np.asarray(self.photo_xy, dtype=np.float64).reshape(-1, 2)
        self.plan_xy = np.asarray(self.plan_xy, dtype=np.float64).reshape(-1, 2)
        self.point3d_ids = np.asarray(self.point3d_ids, dtype=np.int64)
        if self.local_indices is None:
            self.local_indices = np.arange(len(self.photo_xy), dtype=np.int64)
        else:
            self.local_indices = np.asarray(self.local_indices, dtype=np.int64)

    def __len__(self):
        return len(self.photo_xy)

    @property
    def photo_norm(self) -> np.ndarray:
        return self.photo_xy / np.asarray(self.photo_size, dtype=np.float64)

    @property
    def plan_norm(self) -> np.ndarray:
        return self.plan_xy / np.asarray(self.plan_size, dtype=np.float64)

    def record(self, i: int) -> Correspondence:
        return Correspondence(
            photo_xy=tuple(self.photo_xy[i]),
            plan_xy=tuple(self.plan_xy[i]),
            photo_norm=tuple(self.photo_norm[i]),
            plan_norm=tuple(self.plan_norm[i]),
            point3d_id=int(self.point3d_ids[i]),
        )

    def validate(self):
        if len(self) < 1:
            raise ValueError("correspondence set must hold at least one record")
        if len(np.unique(self.point3d_ids)) != len(self.point3d_ids):
            raise ValueError("duplicate point3d_id in correspondence set")

    @property
    def key(self):
        return (self.scene_id, self.plan_id, self.image_id)


@dataclass
class SceneCorrespondences:
    """derive_scene output: per-image sets plus the images that were skipped."""

    sets: list
    skipped: dict  # image_id -> reason string

    def total_records(self) -> int:
        return sum(len(s) for s in self.sets)


def _inside(xy, size):
    w, h = size
    return (xy[:, 0] >= 0) & (xy[:, 0] < w) & (xy[:, 1] >= 0) & (xy[:, 1] < h)


def derive_pair(
    model: SparseModel,
    alignment: PlanAlignment,
    image_id: int,
    *,
    scene_id: str = "",
    photo_source: str = "reproject",
    max_reproj_error_px: float = 4.0,
    clip_to_plan: bool = True,
) -> CorrespondenceSet:
    """Correspondences between one photo and the aligned floor plan.

    ``photo_source`` selects the photo-side pixel: ``reproject`` applies the
    camera to the 3D point, ``observed`` takes the stored keypoint. Records
    are dropped when the point's stored reprojection error exceeds
    ``max_reproj_error_px``, when the point lies behind the camera, when the
    photo pixel leaves the photo, or (with ``clip_to_plan``) when the plan
    pixel leaves the plan. Raises NoVisiblePoints when nothing survives.
    """
    if photo_source not in ("reproject", "observed"):
        raise ValueError(f"unknown photo_source {photo_source!r}")
    img = model.images.get(image_id)
    if img is None:
        raise UnknownImage(f"image {image_id} not in model")
    cam = model.cameras[img.camera_id]

    has_point = img.point3d_ids != NO_POINT3D
    obs_idx = np.flatnonzero(has_point)
    if len(obs_idx):
        # Keep the first observation per point so provenance stays unique.
        _, first = np.unique(img.point3d_ids[obs_idx], return_index=True)
        obs_idx = obs_idx[np.sort(first)]
    point_ids = img.point3d_ids[obs_idx]

    if len(obs_idx) == 0:
        raise NoVisiblePoints(f"image {image_id} observes no reconstructed points")

    plan_pose = camera_plan_pose(alignment, img)

    xyz = np.stack([model.points[int(pid)].xyz for pid in point_ids])
    errors = np.array([model.points[int(pid)].error for pid in point_ids])

    reproj_xy, in_front = project_points(cam, img, xyz)
    photo_xy = reproj_xy if photo_source == "reproject" else img.xys[obs_idx]

    keep = in_front & (errors <= max_reproj_error_px)
    with np.errstate(invalid="ignore"):  # NaN pixels (behind camera) compare False
        keep &= _inside(photo_xy, (cam.width, cam.height))
    plan_xy = rectify_and_flatten(alignment, xyz)
    if clip_to_plan:
        keep &= _inside(plan_xy, (alignment.plan_width, alignment.plan_height))

    if not keep.any():
        raise NoVisiblePoints(f"image {image_id}: every candidate record was filtered")

    return CorrespondenceSet(
        scene_id=scene_id,
        plan_id=alignment.plan_id,
        image_id=image_id,
        photo_xy=photo_xy[keep],
        plan_xy=plan_xy[keep],
        point3d_ids=point_ids[keep],
        photo_size=(cam.width, cam.height),
        plan_size=(alignment.plan_width, alignment.plan_height),
        plan_pose=plan_pose,
        local_indices=obs_idx[keep],
    )


def derive_scene(
    model: SparseModel,
    alignment: PlanAlignment,
    *,
    scene_id: str = "",
    photo_source: str = "reproject",
    max_reproj_error_px: float = 4.0,
    clip_to_plan: bool = True,
) -> SceneCorrespondences:
    """One correspondence set per image with surviving records, by image_id.

    Per-image failures never abort the batch; they are recorded in the
    ``skipped`` report instead.
    """
    sets = []
    skipped = {}
    for image_id in sorted(model.images):
        try:
            sets.append(
                derive_pair(
                    model,
                    alignment,
                    image_id,
                    scene_id=scene_id,
                    photo_source=photo_source,
                    max_reproj_error_px=max_reproj_error_px,
                    clip_to_plan=clip_to_plan,
                )
            )
        except (NoVisiblePoints, VerticalCamera) as exc:
            skipped[image_id] = str(exc)
    return SceneCorrespondences(sets=sets, skipped=skipped)


def shift_plan_frame(cset: CorrespondenceSet, matrix: np.ndarray, offset,
                     plan_size) -> CorrespondenceSet:
    """Apply an affine map (plan_xy -> matrix @ plan_xy + offset) to the plan
    side of a set, including the pose, and rebase it onto a new canvas."""
    matrix = np.asarray(matrix, dtype=np.float64)
    offset = np.asarray(offset, dtype=np.float64)
    pos = matrix @ np.asarray(cset.plan_pose.position) + offset
    # Pure rotations (det +1, orthonormal) turn the heading with them.
    d_old = np.array([np.cos(cset.plan_pose.heading), np.sin(cset.plan_pose.heading)])
    d_new = matrix @ d_old
    if np.linalg.norm(d_new) > 0:
        heading = normalize_angle(math.atan2(d_new[1], d_new[0]))
    else:
        heading = cset.plan_pose.heading
    pose = PlanPose(
        position=(float(pos[0]), float(pos[1])),
        heading=heading,
        normalized_position=(float(pos[0]) / plan_size[0], float(pos[1]) / plan_size[1]),
    )
    return replace(
        cset,
        plan_xy=cset.plan_xy @ matrix.T + offset,
        plan_size=tuple(plan_size),
        plan_pose=pose,
    )
