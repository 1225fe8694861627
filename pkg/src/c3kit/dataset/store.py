"""On-disk dataset layout: manifest, per-pair blobs, poses, plan images.

Layout relative to the dataset root::

    manifest.json
    scenes/<scene_id>/plans/<file>                  plan images, when present
    scenes/<scene_id>/pairs/<plan_id>/<image_id>.c3c
    scenes/<scene_id>/poses.csv                     plan_id,image_id,x,y,heading

The manifest write is a single atomic rename so a crashed export never leaves
a half-written registry behind.
"""

import csv
import json
import os
import shutil
from pathlib import Path

import numpy as np

from ..correspondence import CorrespondenceSet
from ..errors import VersionMismatch
from ..geometry import PlanPose
from . import blob
from .manifest import Dataset, scene_from_dict, scene_to_dict

MANIFEST_FORMAT = "c3-dataset"
MANIFEST_VERSION = 1


def pair_blob_path(root, scene_id, plan_id, image_id) -> Path:
    return Path(root) / "scenes" / scene_id / "pairs" / plan_id / f"{image_id}.c3c"


def _poses_path(root, scene_id) -> Path:
    return Path(root) / "scenes" / scene_id / "poses.csv"


def _write_manifest(dataset: Dataset, root: Path):
    payload = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "scenes": [scene_to_dict(dataset.scenes[sid]) for sid in sorted(dataset.scenes)],
    }
    target = root / "manifest.json"
    tmp = root / "manifest.json.tmp"
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, target)


def export_dataset(dataset: Dataset, out_path) -> None:
    """Write the dataset under ``out_path`` (created if needed)."""
    root = Path(out_path)
    root.mkdir(parents=True, exist_ok=True)

    for sid in sorted(dataset.scenes):
        scene = dataset.scenes[sid]
        scene.validate()
        scene_dir = root / "scenes" / sid
        scene_dir.mkdir(parents=True, exist_ok=True)

        poses = []
        for ref in scene.pairs:
            key = (sid, ref.plan_id, ref.image_id)
            cset = dataset.pair_sets.get(key)
            if cset is None:
                continue  # manifest may reference pairs not loaded in memory
            path = pair_blob_path(root, sid, ref.plan_id, ref.image_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            blob.write_records(
                path, cset.photo_xy, cset.plan_xy, cset.point3d_ids, cset.local_indices
            )
            p = cset.plan_pose
            poses.append((ref.plan_id, ref.image_id, p.position[0], p.position[1], p.heading))

        if poses:
            with open(_poses_path(root, sid), "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["plan_id", "image_id", "x", "y", "heading"])
                for plan_id, image_id, x, y, heading in poses:
                    writer.writerow([
                        plan_id, image_id,
                        format(x, ".17g"), format(y, ".17g"), format(heading, ".17g"),
                    ])

        for fp in scene.floor_plans:
            src = Path(fp.path)
            if not src.is_absolute() and dataset.root is not None:
                src = Path(dataset.root) / fp.path
            if src.is_file():
                dst = scene_dir / "plans" / src.name
                if src.resolve() != dst.resolve():
                    dst.parent.mkdir(parents=True, exist_ok=True)
                    shutil.copyfile(src, dst)
                fp.path = dst.relative_to(root).as_posix()

    _write_manifest(dataset, root)
    dataset.root = root


def _read_poses(root, scene_id) -> dict:
    path = _poses_path(root, scene_id)
    poses = {}
    if not path.exists():
        return poses
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        for row in reader:
            plan_id, image_id, x, y, heading = row
            poses[(plan_id, int(image_id))] = (float(x), float(y), float(heading))
    return poses


def import_dataset(path, load_pairs: bool = True) -> Dataset:
    """Read a dataset root back into memory.

    Raises VersionMismatch for unknown manifest/blob formats and
    ChecksumFailure for damaged blobs.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    payload = json.loads(manifest_path.read_text("utf-8"))
    if payload.get("format") != MANIFEST_FORMAT:
        raise VersionMismatch(f"{manifest_path}: format {payload.get('format')!r}")
    if payload.get("version") != MANIFEST_VERSION:
        raise VersionMismatch(
            f"{manifest_path}: version {payload.get('version')!r}, "
            f"expected {MANIFEST_VERSION}"
        )

    dataset = Dataset(root=root)
    for scene_dict in payload["scenes"]:
        scene = scene_from_dict(scene_dict)
        pair_refs = scene.pairs
        scene.pairs = []
        dataset.add_scene(scene)

        if not load_pairs:
            scene.pairs = pair_refs
            continue

        poses = _read_poses(root, scene.scene_id)
        for ref in pair_refs:
            blob_path = pair_blob_path(root, scene.scene_id, ref.plan_id, ref.image_id)
            photo_xy, plan_xy, point3d_ids, local_indices = blob.read_records(blob_path)
            plan = scene.plan(ref.plan_id)
            x, y, heading = poses[(ref.plan_id, ref.image_id)]
            pose = PlanPose(
                position=(x, y),
                heading=heading,
                normalized_position=(x / plan.width, y / plan.height),
            )
            dataset.add_pair(CorrespondenceSet(
                scene_id=scene.scene_id,
                plan_id=ref.plan_id,
                image_id=ref.image_id,
                photo_xy=photo_xy,
                plan_xy=plan_xy,
                point3d_ids=point3d_ids,
                photo_size=(ref.photo_width, ref.photo_height),
                plan_size=(plan.width, plan.height),
                plan_pose=pose,
                local_indices=local_indices,
            ))
    return dataset


def datasets_equal(a: Dataset, b: Dataset) -> bool:
    """Exact equality of manifests, poses and correspondence records."""
    if sorted(a.scenes) != sorted(b.scenes):
        return False
    for sid in a.scenes:
        if scene_to_dict(a.scenes[sid]) != scene_to_dict(b.scenes[sid]):
            return False
    if set(a.pair_sets) != set(b.pair_sets):
        return False
    for key, ca in a.pair_sets.items():
        cb = b.pair_sets[key]
        if ca.photo_size != cb.photo_size or ca.plan_size != cb.plan_size:
            return False
        if not (
            np.array_equal(ca.photo_xy, cb.photo_xy)
            and np.array_equal(ca.plan_xy, cb.plan_xy)
            and np.array_equal(ca.point3d_ids, cb.point3d_ids)
            and np.array_equal(ca.local_indices, cb.local_indices)
        ):
            return False
        if ca.plan_pose != cb.plan_pose:
            return False
    return True
