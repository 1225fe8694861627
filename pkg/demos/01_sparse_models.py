"""
Reading and writing SfM sparse models
=====================================

Builds a small synthetic reconstruction, writes it in both the binary and
the text form, reads it back, and pokes at the validation. Run directly:

    python3 demos/01_sparse_models.py
"""

import tempfile
from pathlib import Path

import numpy as np

from c3kit import models_equal, parse_model, write_model
from c3kit.errors import IntegrityError
from c3kit.synthetic import make_random_model

rng = np.random.default_rng(7)
model = make_random_model(rng, n_points=500, n_images=6, n_cameras=3)
print(f"synthetic model: {len(model.cameras)} cameras, {len(model.images)} images, "
      f"{len(model.points)} points, {model.num_observations()} observations")

workdir = Path(tempfile.mkdtemp(prefix="c3_demo_"))

# Binary is the wire format reconstruction tools emit; round-trips bit-exactly.
write_model(model, workdir / "binary", "binary")
again = parse_model(workdir / "binary")
print("binary round-trip field-for-field equal:", models_equal(model, again))

# The text form is greppable; reals carry 17 significant digits so floats
# survive exactly as well.
write_model(model, workdir / "text", "text")
from_text = parse_model(workdir / "text", "auto")
print("text round-trip equal:", models_equal(model, from_text))
print("first camera line:",
      (workdir / "text" / "cameras.txt").read_text().splitlines()[1][:70], "...")

# Validation catches dangling references on load. Corrupt one observation's
# 3D point id and watch the parser refuse the directory.
img = again.images[1]
ids = img.point3d_ids.copy()
ids[np.flatnonzero(ids >= 0)[0]] = 999_999
again.images[1] = img._replace(point3d_ids=ids)

from c3kit.colmap_io import _write_images_binary

_write_images_binary(again.images, workdir / "binary" / "images.bin")
try:
    parse_model(workdir / "binary")
except IntegrityError as exc:
    print("corruption detected:", exc)
