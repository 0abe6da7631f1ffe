"""Color segmentation of top-down warehouse frames.

Pixels are classified by RGB range containment into role masks (platform,
goal, obstacle, auxiliary). Set pixels group into objects under a gapped
connectivity rule: two pixels belong together when a chain of set pixels
links them with every step moving at most `gap_px` in x and in y. The
default gap of 10 px absorbs specular dropouts inside one physical object.

Object filtering happens after gap-merging: anything smaller than the pixel
equivalent of the configured minimum floor area (15 cm^2 by default at
2.96875 mm/px, i.e. 171 px) is treated as noise. Obstacles whose mutual gap
is too narrow for the platform to pass are merged into a single planning
obstacle before any route graph is built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .frames import Frame

DEFAULT_GAP_PX = 10
DEFAULT_MIN_AREA_CM2 = 15.0


class ConfigurationError(ValueError):
    """Invalid color-class configuration."""


class Role(str, Enum):
    PLATFORM = "platform"
    GOAL = "goal"
    OBSTACLE = "obstacle"
    AUXILIARY = "auxiliary"


@dataclass(frozen=True)
class ColorClass:
    """One RGB range; a pixel matches when every channel is inside [lo, hi]."""

    role: Role
    lo: tuple[int, int, int]
    hi: tuple[int, int, int]
    platform_id: str | None = None

    def __post_init__(self) -> None:
        for channel in range(3):
            lo, hi = self.lo[channel], self.hi[channel]
            if not (0 <= lo <= hi <= 255):
                raise ConfigurationError(
                    f"channel {channel} range [{lo}, {hi}] out of order or bounds"
                )
        if self.role is Role.PLATFORM and not self.platform_id:
            raise ConfigurationError("platform class needs a platform_id")
        if self.role is not Role.PLATFORM and self.platform_id is not None:
            raise ConfigurationError("platform_id only applies to platform classes")

    def key(self) -> str:
        if self.role is Role.PLATFORM:
            return f"{self.role.value}:{self.platform_id}"
        return self.role.value


def _ranges_overlap(a: ColorClass, b: ColorClass) -> bool:
    return all(a.lo[c] <= b.hi[c] and b.lo[c] <= a.hi[c] for c in range(3))


def validate_classes(classes: Sequence[ColorClass]) -> None:
    """Reject same-role range overlap and duplicate platform ids."""
    seen_platform: set[str] = set()
    for cls in classes:
        if cls.role is Role.PLATFORM:
            if cls.platform_id in seen_platform:
                raise ConfigurationError(
                    f"more than one range for platform {cls.platform_id!r}"
                )
            seen_platform.add(cls.platform_id)  # type: ignore[arg-type]
    for i, a in enumerate(classes):
        for b in classes[i + 1 :]:
            if a.role is b.role and _ranges_overlap(a, b):
                raise ConfigurationError(
                    f"overlapping ranges within role {a.role.value}"
                )


@dataclass(frozen=True)
class SceneObject:
    """A segmented blob: class, pixel stats in frame coordinates."""

    cls: ColorClass
    pixel_count: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]  # x_min, y_min, x_max, y_max
    area_mm2: float

    def __post_init__(self) -> None:
        if self.pixel_count < 1:
            raise ValueError("object needs at least one pixel")
        x_min, y_min, x_max, y_max = self.bbox
        if x_min > x_max or y_min > y_max:
            raise ValueError(f"inverted bbox {self.bbox}")
        cx, cy = self.centroid
        if not (x_min <= cx <= x_max and y_min <= cy <= y_max):
            raise ValueError(f"centroid {self.centroid} outside bbox {self.bbox}")

    @property
    def bbox_f(self) -> tuple[float, float, float, float]:
        return tuple(float(v) for v in self.bbox)  # type: ignore[return-value]

    def to_record(self) -> dict:
        rec = {
            "class": self.cls.role.value,
            "pixel_count": self.pixel_count,
            "centroid": [self.centroid[0], self.centroid[1]],
            "bbox": list(self.bbox),
            "area_mm2": self.area_mm2,
        }
        if self.cls.platform_id is not None:
            rec["platform_id"] = self.cls.platform_id
        return rec


def centroid(pixels: Iterable[tuple[float, float]]) -> tuple[float, float]:
    """Arithmetic mean of pixel coordinates."""
    sx = sy = 0.0
    n = 0
    for x, y in pixels:
        sx += x
        sy += y
        n += 1
    if n == 0:
        raise ValueError("centroid of an empty pixel set")
    return (sx / n, sy / n)


def min_area_pixels(min_area_cm2: float, mm_per_px: float) -> int:
    """Pixel-count floor equivalent to a physical area (rounded up)."""
    if min_area_cm2 <= 0:
        raise ValueError("area must be positive")
    if mm_per_px <= 0:
        raise ValueError("mm_per_px must be positive")
    return math.ceil(min_area_cm2 * 100.0 / (mm_per_px * mm_per_px))


def classify_pixels(
    frame: Frame | np.ndarray, classes: Sequence[ColorClass]
) -> dict[ColorClass, np.ndarray]:
    """Boolean mask per class; first matching class in order wins.

    The precedence rule keeps masks disjoint even when ranges of different
    roles overlap (same-role overlap is rejected outright).
    """
    validate_classes(classes)
    arr = frame.as_array() if isinstance(frame, Frame) else np.asarray(frame)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) image, got {arr.shape}")
    taken = np.zeros(arr.shape[:2], dtype=bool)
    masks: dict[ColorClass, np.ndarray] = {}
    for cls in classes:
        lo = np.array(cls.lo, dtype=np.uint8)
        hi = np.array(cls.hi, dtype=np.uint8)
        inside = np.all((arr >= lo) & (arr <= hi), axis=2)
        inside &= ~taken
        taken |= inside
        masks[cls] = inside
    return masks


def _boundary(mask: np.ndarray) -> np.ndarray:
    eroded = ndimage.binary_erosion(mask, structure=np.ones((3, 3), bool))
    return mask & ~eroded


def _min_chebyshev(a: np.ndarray, b: np.ndarray) -> int:
    """Exact minimum Chebyshev distance between two (n, 2) int coordinate sets."""
    best = np.iinfo(np.int64).max
    step = max(1, 2_000_000 // max(1, b.shape[0]))
    for i in range(0, a.shape[0], step):
        chunk = a[i : i + step]
        d = np.abs(chunk[:, None, :] - b[None, :, :]).max(axis=2)
        best = min(best, int(d.min()))
    return best


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def segment_objects(
    mask: np.ndarray,
    cls: ColorClass,
    gap_px: int = DEFAULT_GAP_PX,
    min_area_px: int = 1,
    mm_per_px: float = 1.0,
) -> list[SceneObject]:
    """Group set pixels into objects under the Chebyshev gap rule.

    Base 8-connected components are labeled first, then components whose
    minimum pixel-to-pixel Chebyshev distance is <= gap_px are unioned
    (boundary pixels suffice for the minimum). The area floor applies after
    the merge so a gap-split object is not discarded piecewise. Output is
    sorted by bbox (x_min, y_min, ...), independent of iteration order.
    """
    if gap_px < 0:
        raise ValueError("gap_px must be non-negative")
    if min_area_px < 0:
        raise ValueError("min_area_px must be non-negative")
    m = np.ascontiguousarray(np.asarray(mask, dtype=bool))
    if m.ndim != 2:
        raise ValueError(f"mask must be 2-d, got shape {m.shape}")
    ys, xs = np.nonzero(m)
    if xs.size == 0:
        return []

    if gap_px == 0:
        # a zero gap admits no step at all: every set pixel stands alone
        roots = np.arange(xs.size)
    else:
        labels, nlab = ndimage.label(m, structure=np.ones((3, 3), int))
        px_labels = labels[ys, xs] - 1
        uf = _UnionFind(nlab)
        if nlab > 1 and gap_px > 1:
            bys, bxs = np.nonzero(_boundary(m))
            blabels = labels[bys, bxs] - 1
            order = np.argsort(blabels, kind="stable")
            bcoords = np.stack([bxs[order], bys[order]], axis=1)
            blabels = blabels[order]
            starts = np.searchsorted(blabels, np.arange(nlab))
            ends = np.searchsorted(blabels, np.arange(nlab), side="right")
            slices = ndimage.find_objects(labels)
            boxes = [
                (s[1].start, s[0].start, s[1].stop - 1, s[0].stop - 1) for s in slices
            ]
            for i in range(nlab):
                for j in range(i + 1, nlab):
                    gx = max(boxes[i][0] - boxes[j][2], boxes[j][0] - boxes[i][2], 0)
                    gy = max(boxes[i][1] - boxes[j][3], boxes[j][1] - boxes[i][3], 0)
                    if max(gx, gy) > gap_px:
                        continue
                    bi = bcoords[starts[i] : ends[i]]
                    bj = bcoords[starts[j] : ends[j]]
                    if _min_chebyshev(bi, bj) <= gap_px:
                        uf.union(i, j)
        roots_of_label = np.array([uf.find(i) for i in range(nlab)])
        roots = roots_of_label[px_labels]

    # integer accumulations keep centroids bit-identical in any pixel order
    _, roots = np.unique(roots, return_inverse=True)
    ngroups = int(roots.max()) + 1
    counts = np.bincount(roots, minlength=ngroups)
    sum_x = np.bincount(roots, weights=xs, minlength=ngroups)
    sum_y = np.bincount(roots, weights=ys, minlength=ngroups)
    min_x = np.full(ngroups, np.iinfo(np.int64).max)
    min_y = np.full(ngroups, np.iinfo(np.int64).max)
    max_x = np.full(ngroups, -1)
    max_y = np.full(ngroups, -1)
    np.minimum.at(min_x, roots, xs)
    np.minimum.at(min_y, roots, ys)
    np.maximum.at(max_x, roots, xs)
    np.maximum.at(max_y, roots, ys)

    objects = []
    for g in range(ngroups):
        n = int(counts[g])
        if n < min_area_px:
            continue
        objects.append(
            SceneObject(
                cls=cls,
                pixel_count=n,
                centroid=(float(sum_x[g]) / n, float(sum_y[g]) / n),
                bbox=(int(min_x[g]), int(min_y[g]), int(max_x[g]), int(max_y[g])),
                area_mm2=n * mm_per_px * mm_per_px,
            )
        )
    objects.sort(key=lambda o: o.bbox)
    return objects


def _bbox_gap(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    gx = max(a[0] - b[2], b[0] - a[2], 0)
    gy = max(a[1] - b[3], b[1] - a[3], 0)
    return float(max(gx, gy))


def merge_impassable(
    obstacles: Sequence[SceneObject], min_corridor_px: float
) -> list[SceneObject]:
    """Union obstacles whose mutual gap is too narrow to drive through.

    Two obstacles merge when the larger of their horizontal and vertical
    bbox separations is below `min_corridor_px` (overlapping boxes have gap
    0). Merging grows boxes, which can pull in further obstacles, so the
    rule iterates to a fixpoint; the fixpoint is unique because gaps only
    shrink as boxes grow. Result sorted by bbox.
    """
    if min_corridor_px < 0:
        raise ValueError("min_corridor_px must be non-negative")
    items = sorted(obstacles, key=lambda o: o.bbox)
    merged = True
    while merged:
        merged = False
        for i in range(len(items)):
            for j in range(i + 1, len(items)):
                if _bbox_gap(items[i].bbox, items[j].bbox) < min_corridor_px:
                    a, b = items[i], items[j]
                    n = a.pixel_count + b.pixel_count
                    cx = (a.centroid[0] * a.pixel_count + b.centroid[0] * b.pixel_count) / n
                    cy = (a.centroid[1] * a.pixel_count + b.centroid[1] * b.pixel_count) / n
                    box = (
                        min(a.bbox[0], b.bbox[0]),
                        min(a.bbox[1], b.bbox[1]),
                        max(a.bbox[2], b.bbox[2]),
                        max(a.bbox[3], b.bbox[3]),
                    )
                    union = SceneObject(
                        cls=a.cls,
                        pixel_count=n,
                        centroid=(cx, cy),
                        bbox=box,
                        area_mm2=a.area_mm2 + b.area_mm2,
                    )
                    items = [o for k, o in enumerate(items) if k not in (i, j)]
                    items.append(union)
                    items.sort(key=lambda o: o.bbox)
                    merged = True
                    break
            if merged:
                break
    return items
