"""Synthetic models, scenes and workspaces for tests, demos and fixtures.

Two flavors of sparse model are generated: structurally valid models with
arbitrary geometry (fast, for serialization tests) and geometrically
consistent models whose observations are exact reprojections of visible
points (for projection and correspondence oracles).
"""

import math
from pathlib import Path

import numpy as np

from .colmap_io import CameraIntrinsics, ImagePose, ScenePoint, SparseModel, write_model
from .correspondence import derive_scene
from .dataset.manifest import Component, Dataset, FloorPlan, SceneManifest
from .dataset.store import export_dataset
from .geometry import (
    PlanAlignment,
    SimilarityTransform2D,
    matrix_to_qvec,
    project_points,
)

IMAGE_SIZES = ((640, 480), (1024, 768), (800, 600))


def random_unit_quaternion(rng) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return q


def random_camera(rng, camera_id, model_id=None) -> CameraIntrinsics:
    if model_id is None:
        model_id = int(rng.integers(0, 5))
    width, height = IMAGE_SIZES[int(rng.integers(0, len(IMAGE_SIZES)))]
    f = float(rng.uniform(0.6, 1.2)) * width
    cx = width / 2.0 + float(rng.uniform(-5, 5))
    cy = height / 2.0 + float(rng.uniform(-5, 5))
    k1 = float(rng.uniform(-0.05, 0.05))
    k2 = float(rng.uniform(-0.01, 0.01))
    p1 = float(rng.uniform(-0.002, 0.002))
    p2 = float(rng.uniform(-0.002, 0.002))
    params = {
        0: [f, cx, cy],
        1: [f, f * float(rng.uniform(0.98, 1.02)), cx, cy],
        2: [f, cx, cy, k1],
        3: [f, cx, cy, k1, k2],
        4: [f, f * float(rng.uniform(0.98, 1.02)), cx, cy, k1, k2, p1, p2],
    }[model_id]
    return CameraIntrinsics(camera_id, model_id, width, height, np.asarray(params, dtype=np.float64))


def make_random_model(rng, n_points=100, n_images=4, n_cameras=2,
                      obs_prob=0.3, n_unmatched=3) -> SparseModel:
    """Structurally valid model with arbitrary geometry.

    Observations and tracks are bidirectionally consistent; a few
    observations per image reference no 3D point.
    """
    cameras = {cid: random_camera(rng, cid) for cid in range(1, n_cameras + 1)}
    point_ids = np.arange(10, 10 + n_points, dtype=np.int64)

    obs_per_image = {}
    track_points, track_images, track_indices = [], [], []
    images = {}
    for image_id in range(1, n_images + 1):
        cam = cameras[int(rng.integers(1, n_cameras + 1))]
        sel = np.flatnonzero(rng.random(n_points) < obs_prob)
        extra = int(rng.integers(0, n_unmatched + 1))
        total = len(sel) + extra
        xys = np.column_stack([
            rng.uniform(0, cam.width, total),
            rng.uniform(0, cam.height, total),
        ])
        p3d = np.full(total, -1, dtype=np.int64)
        p3d[: len(sel)] = point_ids[sel]
        images[image_id] = ImagePose(
            image_id, random_unit_quaternion(rng), rng.normal(size=3),
            cam.camera_id, f"img_{image_id:05d}.jpg", xys, p3d,
        )
        track_points.append(sel)
        track_images.append(np.full(len(sel), image_id, dtype=np.int64))
        track_indices.append(np.arange(len(sel), dtype=np.int64))
        obs_per_image[image_id] = total

    tracks = {int(pid): [] for pid in point_ids}
    if track_points:
        tp = np.concatenate(track_points)
        ti = np.concatenate(track_images)
        tx = np.concatenate(track_indices)
        order = np.argsort(tp, kind="stable")
        tp, ti, tx = tp[order], ti[order], tx[order]
        uniq, starts = np.unique(tp, return_index=True)
        for u, start, stop in zip(uniq, starts, list(starts[1:]) + [len(tp)]):
            tracks[int(point_ids[u])] = np.column_stack([ti[start:stop], tx[start:stop]])

    points = {}
    xyz = rng.uniform(-5, 5, (n_points, 3))
    rgb = rng.integers(0, 256, (n_points, 3), dtype=np.int64).astype(np.uint8)
    errors = np.abs(rng.normal(0, 1.5, n_points))
    for i, pid in enumerate(point_ids):
        track = tracks[int(pid)]
        if isinstance(track, list):
            track = np.empty((0, 2), dtype=np.int64)
        points[int(pid)] = ScenePoint(int(pid), xyz[i], rgb[i], float(errors[i]), track)
    return SparseModel(cameras, images, points)


def look_at_rotation(center, target, up_world=(0.0, 1.0, 0.0)) -> np.ndarray:
    """World-to-camera rotation for a camera at ``center`` facing ``target``."""
    z = np.asarray(target, dtype=np.float64) - np.asarray(center, dtype=np.float64)
    z = z / np.linalg.norm(z)
    down = -np.asarray(up_world, dtype=np.float64)
    x = np.cross(down, z)
    if np.linalg.norm(x) < 1e-9:  # looking straight up or down
        x = np.array([1.0, 0.0, 0.0])
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z])


def make_projected_model(rng, n_points=200, n_images=6, model_ids=(0, 1, 2, 3, 4),
                         spread=4.0, ring_radius=12.0, point_error=0.5) -> SparseModel:
    """Model whose observations are exact reprojections of visible points.

    Cameras sit on a ring around the cloud and look at its center, so the
    mean camera-down direction recovers -y as world down.
    """
    pts = np.column_stack([
        rng.uniform(-spread, spread, n_points),
        rng.uniform(-spread / 2, spread / 2, n_points),
        rng.uniform(-spread, spread, n_points),
    ])
    point_ids = np.arange(1, n_points + 1, dtype=np.int64)

    cameras = {}
    images = {}
    observations = {}  # image_id -> (obs_idx array over points, xys)
    for i in range(n_images):
        camera_id = i + 1
        cameras[camera_id] = random_camera(rng, camera_id, model_ids[i % len(model_ids)])
        phi = 2 * math.pi * i / n_images + float(rng.uniform(-0.1, 0.1))
        center = np.array([
            ring_radius * math.cos(phi),
            float(rng.uniform(-1.0, 1.0)),
            ring_radius * math.sin(phi),
        ])
        rot = look_at_rotation(center, np.zeros(3))
        qvec = matrix_to_qvec(rot)
        tvec = -rot @ center
        cam = cameras[camera_id]
        pose = ImagePose(camera_id, qvec, tvec, camera_id, f"view_{i:03d}.jpg",
                         np.empty((0, 2)), np.empty(0, dtype=np.int64))
        xy, in_front = project_points(cam, pose, pts)
        with np.errstate(invalid="ignore"):
            visible = in_front & (xy[:, 0] >= 0) & (xy[:, 0] < cam.width) \
                & (xy[:, 1] >= 0) & (xy[:, 1] < cam.height)
        sel = np.flatnonzero(visible)
        images[camera_id] = ImagePose(
            camera_id, qvec, tvec, camera_id, f"view_{i:03d}.jpg",
            np.ascontiguousarray(xy[sel]), point_ids[sel].copy(),
        )
        observations[camera_id] = sel

    points = {}
    for j, pid in enumerate(point_ids):
        track = []
        for image_id, sel in observations.items():
            pos = np.flatnonzero(sel == j)
            if len(pos):
                track.append((image_id, int(pos[0])))
        points[int(pid)] = ScenePoint(
            int(pid), pts[j],
            rng.integers(0, 256, 3, dtype=np.int64).astype(np.uint8),
            float(rng.uniform(0, point_error)),
            np.asarray(track, dtype=np.int64).reshape(-1, 2),
        )
    return SparseModel(cameras, images, points)


def make_alignment(rng=None, plan_size=(400, 300), spread=4.0,
                   component_id="comp0", plan_id="plan0",
                   theta=None, rectification=None) -> PlanAlignment:
    """Alignment placing a +/-spread cloud inside the plan canvas."""
    w, h = plan_size
    if theta is None:
        theta = float(rng.uniform(-math.pi, math.pi)) if rng is not None else 0.0
    scale = min(w, h) / (2.0 * spread) * 0.6
    return PlanAlignment(
        rectification=np.eye(3) if rectification is None else rectification,
        similarity=SimilarityTransform2D(scale, theta, w / 2.0, h / 2.0),
        plan_width=w,
        plan_height=h,
        component_id=component_id,
        plan_id=plan_id,
    )


def make_scene_dataset(rng, n_scenes=2, n_points=150, n_images=4,
                       plan_size=(400, 300), split="none") -> Dataset:
    """Dataset of fully derived synthetic scenes."""
    dataset = Dataset()
    for s in range(n_scenes):
        scene_id = f"scene_{s:03d}"
        model = make_projected_model(rng, n_points=n_points, n_images=n_images)
        alignment = make_alignment(rng, plan_size=plan_size)
        scene = SceneManifest(
            scene_id=scene_id,
            name=f"Synthetic scene {s}",
            floor_plans=[FloorPlan(alignment.plan_id, f"{alignment.plan_id}.png",
                                   plan_size[0], plan_size[1])],
            components=[Component(alignment.component_id, "")],
            alignments=[alignment],
            split=split,
        )
        dataset.add_scene(scene)
        derived = derive_scene(model, alignment, scene_id=scene_id,
                               max_reproj_error_px=10.0)
        for cset in derived.sets:
            dataset.add_pair(cset)
    return dataset


def plan_image(plan_size=(400, 300), seed=0) -> np.ndarray:
    """Plan-like grayscale drawing: room outlines on a white canvas."""
    rng = np.random.default_rng(seed)
    w, h = plan_size
    img = np.full((h, w), 255, dtype=np.uint8)
    img[10, 10:w - 10] = 0
    img[h - 11, 10:w - 10] = 0
    img[10:h - 10, 10] = 0
    img[10:h - 10, w - 11] = 0
    for _ in range(6):
        x = int(rng.integers(30, w - 30))
        y = int(rng.integers(30, h - 30))
        if rng.random() < 0.5:
            img[y, 20:w - 20] = 0
        else:
            img[20:h - 20, x] = 0
    return img


def write_workspace(root, rng, n_scenes=1, n_points=150, n_images=4,
                    plan_size=(400, 300), model_format="binary") -> Dataset:
    """Annotation-service workspace: manifest, model files and plan images."""
    from PIL import Image

    root = Path(root)
    dataset = Dataset()
    for s in range(n_scenes):
        scene_id = f"scene_{s:03d}"
        model = make_projected_model(rng, n_points=n_points, n_images=n_images)
        model_dir = root / "scenes" / scene_id / "components" / "comp0"
        write_model(model, model_dir, model_format)

        plan_path = root / "scenes" / scene_id / "plans" / "plan0.png"
        plan_path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(plan_image(plan_size, seed=s)).save(plan_path)

        dataset.add_scene(SceneManifest(
            scene_id=scene_id,
            name=f"Synthetic scene {s}",
            floor_plans=[FloorPlan("plan0", str(plan_path), plan_size[0], plan_size[1])],
            components=[Component("comp0", model_dir.relative_to(root).as_posix())],
        ))
    export_dataset(dataset, root)
    return dataset
