"""
From an aligned reconstruction to a correspondence dataset
==========================================================

derive_scene projects every observed 3D point into its photo and into the
floor plan; the dataset layer splits, augments and serializes the result.
"""

import tempfile
from pathlib import Path

import numpy as np

from c3kit import derive_scene
from c3kit.dataset import (
    AugmentParams,
    augment_plan,
    compute_stats,
    export_dataset,
    import_dataset,
    split_scenes,
)
from c3kit.synthetic import make_alignment, make_projected_model, make_scene_dataset, plan_image

rng = np.random.default_rng(33)

# --- derive one scene by hand ------------------------------------------------
model = make_projected_model(rng, n_points=400, n_images=6)
alignment = make_alignment(rng, plan_size=(400, 300))
derived = derive_scene(model, alignment, scene_id="demo", max_reproj_error_px=10.0)
print(f"derived {len(derived.sets)} pairs, "
      f"{derived.total_records()} correspondences, skipped {len(derived.skipped)}")
first = derived.sets[0].record(0)
print(f"first record of first pair: photo ({first.photo_xy[0]:.1f}, {first.photo_xy[1]:.1f})"
      f" <-> plan ({first.plan_xy[0]:.1f}, {first.plan_xy[1]:.1f})"
      f" [point {first.point3d_id}]")

# --- a multi-scene dataset with a deterministic split ------------------------
dataset = make_scene_dataset(rng, n_scenes=6, n_points=250)
assignment = split_scenes(sorted(dataset.scenes), seed=13, test_fraction=0.33)
for scene_id, side in assignment.items():
    dataset.scenes[scene_id].split = side
print("split:", assignment)

root = Path(tempfile.mkdtemp(prefix="c3_demo_")) / "dataset"
export_dataset(dataset, root)
reloaded = import_dataset(root)
stats = compute_stats(reloaded)
print(f"stats: {stats.pair_count} pairs, {stats.total_correspondences} records, "
      f"per-pair {stats.min_per_pair}..{stats.max_per_pair} "
      f"(mean {stats.mean_per_pair:.1f})")
print("test-only:", compute_stats(reloaded, split="test"))

# --- correspondence-consistent plan augmentation -----------------------------
plan = plan_image((400, 300), seed=1)
cset = next(reloaded.iter_pairs())
params = AugmentParams(brightness=0.3, contrast=0.3, crop_fraction=0.85, rotation=90)
aug_img, aug_set = augment_plan(np.stack([plan] * 3, axis=2), cset, params, seed=5)
print(f"augmented plan canvas {plan.shape[1]}x{plan.shape[0]} -> "
      f"{aug_img.shape[1]}x{aug_img.shape[0]}, "
      f"records {len(cset)} -> {len(aug_set)}")
