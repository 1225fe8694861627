"""Correspondence-consistent floor-plan augmentation.

Photometric jitter leaves coordinates untouched; crops rebase them and drop
records that leave the canvas; rotations move them by the exact coordinate
map (quarter turns) or the equivalent rigid transform (arbitrary angles,
canvas expanded to fit). The photo side of each record never changes.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from ..correspondence import CorrespondenceSet, shift_plan_frame
from ..errors import EmptyAfterCrop

QUARTER_TURNS = (0, 90, 180, 270)


@dataclass(frozen=True)
class AugmentParams:
    """Knobs for one augmentation draw.

    ``brightness``/``contrast``/``saturation`` are jitter strengths s; each
    factor is drawn from U[max(0, 1-s), 1+s]. ``crop_fraction`` keeps a
    randomly placed window of that relative size; ``crop_rect`` (x, y, w, h)
    crops exactly. ``rotation`` is one of: None, a quarter turn from
    {0, 90, 180, 270}, an arbitrary angle in degrees, "quarter" (sample a
    quarter turn) or "any" (sample any angle).
    """

    brightness: float = 0.0
    contrast: float = 0.0
    saturation: float = 0.0
    crop_fraction: float = None
    crop_rect: tuple = None
    rotation: object = None
    fill: int = 255  # canvas background for arbitrary-angle rotation

    def __post_init__(self):
        for name in ("brightness", "contrast", "saturation"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} strength must be >= 0")
        if self.crop_fraction is not None and not 0 < self.crop_fraction <= 1:
            raise ValueError("crop_fraction must be in (0, 1]")
        if self.crop_fraction is not None and self.crop_rect is not None:
            raise ValueError("give either crop_fraction or crop_rect, not both")


def _select(cset: CorrespondenceSet, mask) -> CorrespondenceSet:
    return replace(
        cset,
        photo_xy=cset.photo_xy[mask],
        plan_xy=cset.plan_xy[mask],
        point3d_ids=cset.point3d_ids[mask],
        local_indices=cset.local_indices[mask],
    )


def _jitter(img, rng, params):
    factors = {}
    for name in ("brightness", "contrast", "saturation"):
        s = getattr(params, name)
        factors[name] = float(rng.uniform(max(0.0, 1.0 - s), 1.0 + s)) if s > 0 else 1.0
    out = img.astype(np.float64)
    out = out * factors["brightness"]
    mean = out.mean()
    out = (out - mean) * factors["contrast"] + mean
    if out.ndim == 3 and factors["saturation"] != 1.0:
        gray = out.mean(axis=2, keepdims=True)
        out = gray + (out - gray) * factors["saturation"]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _crop(img, cset, rng, params):
    h, w = img.shape[:2]
    if params.crop_rect is not None:
        x0, y0, cw, ch = params.crop_rect
    else:
        cw = max(1, round(w * params.crop_fraction))
        ch = max(1, round(h * params.crop_fraction))
        x0 = int(rng.integers(0, w - cw + 1))
        y0 = int(rng.integers(0, h - ch + 1))
    if not (0 <= x0 and 0 <= y0 and x0 + cw <= w and y0 + ch <= h and cw > 0 and ch > 0):
        raise ValueError(f"crop rect {(x0, y0, cw, ch)} leaves the {w}x{h} canvas")

    shifted = cset.plan_xy - np.array([x0, y0], dtype=np.float64)
    keep = (
        (shifted[:, 0] >= 0) & (shifted[:, 0] < cw)
        & (shifted[:, 1] >= 0) & (shifted[:, 1] < ch)
    )
    if len(cset) and not keep.any():
        raise EmptyAfterCrop(
            f"crop {(x0, y0, cw, ch)} dropped all {len(cset)} records"
        )
    out = shift_plan_frame(_select(cset, keep), np.eye(2), (-x0, -y0), (cw, ch))
    return img[y0:y0 + ch, x0:x0 + cw], out


def _rotate_quarter(img, cset, turns_deg):
    h, w = img.shape[:2]
    k = QUARTER_TURNS.index(turns_deg)
    if k == 0:
        return img, cset
    if k == 1:  # (x, y) -> (y, W-1-x), canvas H x W
        matrix, offset, size = [[0, 1], [-1, 0]], (0, w - 1), (h, w)
    elif k == 2:  # (x, y) -> (W-1-x, H-1-y)
        matrix, offset, size = [[-1, 0], [0, -1]], (w - 1, h - 1), (w, h)
    else:  # (x, y) -> (H-1-y, x), canvas H x W swapped
        matrix, offset, size = [[0, -1], [1, 0]], (h - 1, 0), (h, w)
    return np.rot90(img, k), shift_plan_frame(cset, matrix, offset, size)


def _rotate_arbitrary(img, cset, angle_deg, fill):
    h, w = img.shape[:2]
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    matrix = np.array([[c, s], [-s, c]])  # CCW in the y-down pixel frame
    new_w = int(math.ceil(w * abs(c) + h * abs(s)))
    new_h = int(math.ceil(w * abs(s) + h * abs(c)))
    center = np.array([(w - 1) / 2.0, (h - 1) / 2.0])
    new_center = np.array([(new_w - 1) / 2.0, (new_h - 1) / 2.0])
    offset = new_center - matrix @ center

    # Nearest-neighbor resample through the inverse map.
    ys, xs = np.mgrid[0:new_h, 0:new_w]
    out_pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    src = (out_pts - new_center) @ matrix + center  # matrix.T applied per row
    sx = np.rint(src[:, 0]).astype(np.int64)
    sy = np.rint(src[:, 1]).astype(np.int64)
    inside = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    shape = (new_h, new_w) + img.shape[2:]
    out = np.full(shape, fill, dtype=img.dtype)
    out.reshape(new_h * new_w, *img.shape[2:])[inside] = img[sy[inside], sx[inside]]
    return out, shift_plan_frame(cset, matrix, offset, (new_w, new_h))


def augment_plan(plan: np.ndarray, cset: CorrespondenceSet, params: AugmentParams,
                 seed: int):
    """Augmented (plan image, correspondence set); deterministic given seed."""
    h, w = plan.shape[:2]
    if (w, h) != tuple(cset.plan_size):
        raise ValueError(
            f"plan canvas {(w, h)} does not match record plan_size {tuple(cset.plan_size)}"
        )
    rng = np.random.default_rng(seed)
    img = _jitter(plan, rng, params) if (
        params.brightness or params.contrast or params.saturation
    ) else plan.copy()
    out = replace(cset)

    if params.crop_fraction is not None or params.crop_rect is not None:
        img, out = _crop(img, out, rng, params)

    rotation = params.rotation
    if rotation == "quarter":
        rotation = int(rng.choice(QUARTER_TURNS))
    elif rotation == "any":
        rotation = float(rng.uniform(0.0, 360.0))
    if rotation is not None:
        angle = float(rotation) % 360.0
        if angle in (0.0, 90.0, 180.0, 270.0):
            img, out = _rotate_quarter(img, out, int(angle))
        else:
            img, out = _rotate_arbitrary(img, out, angle, params.fill)
    return img, out
