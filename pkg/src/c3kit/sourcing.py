"""Offline-testable filters for sourcing floor plans and geotagged photos.

The remote media repository is reached through a pluggable fetch callable so
every piece here (name inference, scene gating, radius filtering, traversal,
caching, rate limiting) runs and tests without network access.
"""

import csv
import hashlib
import json
import math
import os
import time
from collections import deque
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

from .errors import EmptyInput

# IUGG mean Earth radius, meters.
EARTH_RADIUS_M = 6_371_008.8

DEFAULT_RADIUS_M = 50.0

# Checked longest-first so "Floor plans of the X" never leaves a dangling
# "the". Matching is case-insensitive and requires a word boundary.
DEFAULT_PREFIXES = (
    "Floor plans of the",
    "Floor plans of",
    "Floor plan of",
    "Plans of the",
    "Plans of",
    "Maps of",
)
DEFAULT_SUFFIXES = ("in art",)


@dataclass(frozen=True)
class GeoPoint:
    lat: float  # degrees in [-90, 90]
    lon: float  # degrees in [-180, 180]

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} out of range")


# -------------------------------------------------------------- name inference

def _strip_prefix_once(name, prefixes):
    for prefix in sorted(prefixes, key=len, reverse=True):
        n = len(prefix)
        if len(name) < n:
            continue
        if name[:n].casefold() != prefix.casefold():
            continue
        if len(name) == n or name[n].isspace():
            return name[n:].strip(), True
    return name, False


def _strip_suffix_once(name, suffixes):
    for suffix in suffixes:
        n = len(suffix)
        if len(name) < n:
            continue
        if name[-n:].casefold() != suffix.casefold():
            continue
        if len(name) == n or name[-n - 1].isspace():
            return name[:-n].strip(), True
    return name, False


def infer_scene_name(tag: str, prefixes=DEFAULT_PREFIXES, suffixes=DEFAULT_SUFFIXES) -> str:
    """Structure name inferred from a category tag.

    Strips matching prefixes ("Plans of", ...) and suffixes ("in art") at
    word boundaries until none applies, so the result is a fixed point:
    applying the function twice equals applying it once. An empty result is
    possible and means no usable name.
    """
    name = tag.strip()
    changed = True
    while changed and name:
        name, p = _strip_prefix_once(name, prefixes)
        name, s = _strip_suffix_once(name, suffixes)
        changed = p or s
    return name


def load_scene_categories(path=None) -> frozenset:
    """Category set, casefolded. Defaults to the list shipped with the package."""
    if path is None:
        text = resources.files("c3kit.data").joinpath("scene_categories.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    out = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.add(line.casefold())
    return frozenset(out)


_DEFAULT_CATEGORIES = None


def is_scene_of_interest(scene_type: str, categories=None) -> bool:
    """Case-insensitive membership of ``scene_type`` in the category set."""
    global _DEFAULT_CATEGORIES
    if categories is None:
        if _DEFAULT_CATEGORIES is None:
            _DEFAULT_CATEGORIES = load_scene_categories()
        categories = _DEFAULT_CATEGORIES
    else:
        categories = {c.casefold() for c in categories}
    return scene_type.strip().casefold() in categories


# ------------------------------------------------------------ geotag filtering

def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def within_radius(center: GeoPoint, candidate: GeoPoint, radius_m: float = DEFAULT_RADIUS_M) -> bool:
    if not radius_m > 0:
        raise ValueError(f"radius must be positive, got {radius_m}")
    return haversine_m(center, candidate) <= radius_m


class PhotoRecord(NamedTuple):
    photo_id: str
    point: GeoPoint
    url: str


def read_geotag_manifest(path, delimiter=",") -> list:
    """Read a delimited manifest with columns photo_id, lat, lon, url.

    A header row is skipped when its lat column does not parse as a number.
    """
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for i, row in enumerate(csv.reader(fh, delimiter=delimiter)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 4:
                raise ValueError(f"{path}: row {i + 1} has {len(row)} columns, need 4")
            try:
                lat, lon = float(row[1]), float(row[2])
            except ValueError:
                if i == 0:
                    continue  # header
                raise
            records.append(PhotoRecord(row[0].strip(), GeoPoint(lat, lon), row[3].strip()))
    return records


def filter_by_radius(records: Iterable[PhotoRecord], center: GeoPoint,
                     radius_m: float = DEFAULT_RADIUS_M) -> list:
    return [r for r in records if within_radius(center, r.point, radius_m)]


# -------------------------------------------------------- remote client pieces

class RateLimiter:
    """Serializes calls to at most one per ``min_interval`` seconds."""

    def __init__(self, min_interval: float = 1.0, clock=time.monotonic, sleep=time.sleep):
        self.min_interval = min_interval
        self._clock = clock
        self._sleep = sleep
        self._last = None

    def wait(self):
        now = self._clock()
        if self._last is not None:
            remaining = self.min_interval - (now - self._last)
            if remaining > 0:
                self._sleep(remaining)
                now = self._clock()
        self._last = now


class RequestCache:
    """Disk cache: one file per request digest plus a metadata sidecar.

    Bodies are stored verbatim; writes go through a temp file and an atomic
    rename so concurrent readers never see partial content.
    """

    def __init__(self, cache_dir):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _paths(self, url):
        digest = hashlib.sha256(url.encode("utf-8")).hexdigest()
        return self.cache_dir / digest, self.cache_dir / (digest + ".meta.json")

    def get(self, url):
        body_path, meta_path = self._paths(url)
        if not body_path.exists() or not meta_path.exists():
            return None
        meta = json.loads(meta_path.read_text("utf-8"))
        return meta["status"], body_path.read_bytes()

    def put(self, url, status, body: bytes, timestamp=None):
        body_path, meta_path = self._paths(url)
        meta = {
            "url": url,
            "status": int(status),
            "timestamp": time.time() if timestamp is None else timestamp,
        }
        for target, data in ((body_path, body), (meta_path, json.dumps(meta).encode())):
            tmp = target.with_suffix(target.suffix + ".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, target)

    def get_or_fetch(self, url, fetch: Callable[[str], tuple], limiter: RateLimiter = None):
        cached = self.get(url)
        if cached is not None:
            return cached
        if limiter is not None:
            limiter.wait()
        status, body = fetch(url)
        self.put(url, status, body)
        return status, body


def traverse_categories(root: str, list_children: Callable[[str], tuple],
                        max_depth: int = 12):
    """Breadth-first walk of the category graph.

    ``list_children(category)`` returns (subcategories, files). The graph
    contains cycles, so visited categories are skipped; traversal stops
    descending at ``max_depth``. Yields (category, depth, files).
    """
    if not root.strip():
        raise EmptyInput("empty root category")
    seen = {root}
    queue = deque([(root, 0)])
    while queue:
        category, depth = queue.popleft()
        subcategories, files = list_children(category)
        yield category, depth, files
        if depth >= max_depth:
            continue
        for sub in subcategories:
            if sub not in seen:
                seen.add(sub)
                queue.append((sub, depth + 1))
