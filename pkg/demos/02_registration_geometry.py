"""
Registration geometry: similarity transforms, up axes, bird's-eye rasters
=========================================================================

The chain that turns a reconstruction into plan coordinates is
rectification (up axis to +y), a flattening that drops the up coordinate,
and a 2D similarity. This walks each piece on synthetic data.
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from c3kit import (
    SimilarityTransform2D,
    apply_similarity,
    camera_plan_pose,
    estimate_similarity,
    estimate_up_axis,
    rectify_and_flatten,
)
from c3kit.align_service import rasterize_topdown
from c3kit.geometry import PlanAlignment, up_axis_rectification
from c3kit.synthetic import make_projected_model

rng = np.random.default_rng(21)

# --- fitting a similarity from point pairs ---------------------------------
truth = SimilarityTransform2D(scale=1.5, theta=math.radians(30), tx=2.0, ty=-1.0)
src = rng.uniform(-5, 5, (12, 2))
fit = estimate_similarity(src, apply_similarity(truth, src))
print(f"recovered scale={fit.scale:.6f} theta={math.degrees(fit.theta):.3f}deg "
      f"t=({fit.tx:.6f}, {fit.ty:.6f})")

# --- estimating which way is up --------------------------------------------
model = make_projected_model(rng, n_points=300, n_images=8)
up = estimate_up_axis(model)
print("estimated up axis:", np.round(up, 4))
rectification = up_axis_rectification(up)

# --- the full cloud -> plan map ---------------------------------------------
alignment = PlanAlignment(
    rectification=rectification,
    similarity=SimilarityTransform2D(30.0, 0.4, 200.0, 150.0),
    plan_width=400, plan_height=300,
)
cloud = np.stack([p.xyz for p in model.points.values()])
plan_pts = rectify_and_flatten(alignment, cloud)
inside = ((plan_pts >= 0) & (plan_pts < (400, 300))).all(axis=1).mean()
print(f"cloud points landing on the plan canvas: {inside:.0%}")

# Every photo gets a position and viewing direction on the plan.
for image_id in list(model.images)[:3]:
    pose = camera_plan_pose(alignment, model.images[image_id])
    print(f"  image {image_id}: plan position "
          f"({pose.position[0]:7.2f}, {pose.position[1]:7.2f}) "
          f"heading {math.degrees(pose.heading):7.2f}deg")

# --- the annotator's bird's-eye view ----------------------------------------
raster = rasterize_topdown(model, rectification, resolution=256)
out = Path(tempfile.mkdtemp(prefix="c3_demo_")) / "topdown.png"
try:
    from PIL import Image

    Image.fromarray(raster.image).save(out)
    print(f"top-down density raster ({raster.image.shape[1]}x{raster.image.shape[0]}) "
          f"written to {out}")
except ImportError:
    print("Pillow missing; skipped the png")
print("raster bounds:", np.round(raster.bounds, 3),
      "pixels/unit:", round(raster.pixels_per_unit, 3))
