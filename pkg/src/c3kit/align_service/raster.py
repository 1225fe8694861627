"""Bird's-eye density rasters of rectified point clouds."""

import math
from dataclasses import dataclass

import numpy as np

from ..colmap_io import SparseModel
from ..errors import EmptyModel

BOUNDS_PAD = 0.02  # fraction of the extent added on each side


@dataclass
class TopDownRaster:
    """Grayscale splat of a rectified cloud seen from above.

    ``bounds`` (min_x, min_z, max_x, max_z) and ``pixels_per_unit`` define an
    invertible affine map between raster pixels and rectified cloud
    coordinates.
    """

    image: np.ndarray  # (H, W) uint8, log-scaled point density
    bounds: tuple
    pixels_per_unit: float

    def cloud_to_pixel(self, xz):
        xz = np.asarray(xz, dtype=np.float64)
        origin = np.array(self.bounds[:2])
        return (xz - origin) * self.pixels_per_unit

    def pixel_to_cloud(self, px):
        px = np.asarray(px, dtype=np.float64)
        origin = np.array(self.bounds[:2])
        return px / self.pixels_per_unit + origin


def rasterize_topdown(model: SparseModel, rectification, resolution: int = 512) -> TopDownRaster:
    """Splat every rectified point onto the ground plane as a density image.

    ``resolution`` is the pixel count of the long side. Density is
    log-scaled to 8 bits; bounds are padded by 2 percent (with an absolute
    fallback for degenerate extents) so every point maps inside the image.
    """
    if not model.points:
        raise EmptyModel("no 3D points to rasterize")
    if resolution < 1:
        raise ValueError("resolution must be at least 1 pixel")
    rectification = np.asarray(rectification, dtype=np.float64)
    pts = np.stack([p.xyz for p in model.points.values()])
    flat = (pts @ rectification.T)[:, [0, 2]]

    lo = flat.min(axis=0)
    hi = flat.max(axis=0)
    # 2% padding, with an absolute fallback on axes of zero extent.
    pad = np.maximum((hi - lo) * BOUNDS_PAD, 0.5 * (hi == lo))
    lo = lo - pad
    hi = hi + pad
    extent = hi - lo

    ppu = resolution / float(extent.max())
    width = max(1, math.ceil(extent[0] * ppu))
    height = max(1, math.ceil(extent[1] * ppu))

    px = np.floor((flat - lo) * ppu).astype(np.int64)
    px[:, 0] = np.clip(px[:, 0], 0, width - 1)
    px[:, 1] = np.clip(px[:, 1], 0, height - 1)
    counts = np.zeros((height, width), dtype=np.int64)
    np.add.at(counts, (px[:, 1], px[:, 0]), 1)

    peak = counts.max()
    image = (np.log1p(counts) / math.log1p(peak) * 255.0).astype(np.uint8)
    return TopDownRaster(
        image=image,
        bounds=(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])),
        pixels_per_unit=float(ppu),
    )
