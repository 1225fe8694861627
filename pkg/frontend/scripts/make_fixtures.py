"""Regenerate tests/fixtures/probe_consistency.json.

The fixture pins the frontend's render-side math to the service's geometry:
a 5x5 grid of probe transforms, one fiducial cloud point, the expected plan
pixel for each probe computed by the c3kit geometry module, and real raster
metadata from the top-down rasterizer.
"""

import json
import math
from pathlib import Path

import numpy as np

from c3kit.align_service.raster import rasterize_topdown
from c3kit.colmap_io import ScenePoint, SparseModel
from c3kit.geometry import PlanAlignment, SimilarityTransform2D, rectify_and_flatten, up_axis_rectification

FIDUCIAL = (1.25, 0.4, -2.1)
CLOUD = [
    (-3.0, 0.2, -3.0), (3.0, -0.1, -3.0), (-3.0, 0.0, 3.0), (3.0, 0.3, 3.0),
    (0.0, 1.0, 0.0), FIDUCIAL,
]
UP = (0.2, -1.0, 0.1)  # deliberately tilted so rectification is non-trivial


def main():
    rectification = up_axis_rectification(np.asarray(UP))
    model = SparseModel(points={
        i + 1: ScenePoint(i + 1, np.asarray(p, dtype=np.float64),
                          np.zeros(3, dtype=np.uint8), 0.0,
                          np.empty((0, 2), dtype=np.int64))
        for i, p in enumerate(CLOUD)
    })
    raster = rasterize_topdown(model, rectification, resolution=256)

    probes = []
    scales = [0.5, 1.0, 5.0, 20.0, 60.0]
    thetas = [-2.5, -0.8, 0.0, 0.9, 3.0]
    for i, scale in enumerate(scales):
        for j, theta in enumerate(thetas):
            sim = SimilarityTransform2D(scale, theta, 40.0 * i - 60.0, 25.0 * j)
            alignment = PlanAlignment(
                rectification=rectification, similarity=sim,
                plan_width=800, plan_height=600,
            )
            expected = rectify_and_flatten(alignment, np.asarray(FIDUCIAL))
            probes.append({
                "scale": sim.scale, "theta": sim.theta,
                "tx": sim.tx, "ty": sim.ty,
                "expected_plan_xy": [float(expected[0]), float(expected[1])],
            })

    out = {
        "fiducial": list(FIDUCIAL),
        "rectification": [float(v) for v in rectification.ravel()],
        "raster_meta": {
            "bounds": list(raster.bounds),
            "pixelsPerUnit": raster.pixels_per_unit,
            "rasterSize": [int(raster.image.shape[1]), int(raster.image.shape[0])],
        },
        "probes": probes,
    }
    target = Path(__file__).parent.parent / "tests" / "fixtures" / "probe_consistency.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(out, indent=2) + "\n")
    print(f"wrote {target} with {len(probes)} probes")


if __name__ == "__main__":
    main()
