"""Planar geometry for corridor and clearance checks.

All coordinates are float pixels in the camera frame (x right, y down in
image space; nothing here depends on the handedness). Millimeter conversion
happens only at the dispatch boundary.

Bounding boxes are (x_min, y_min, x_max, y_max) tuples. A corridor is the
convex hull of a rectangle's corners at its start pose and at the pose
translated so the rectangle's center sits on the goal point, i.e. the region
swept by the rectangle while it slides in a straight line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

Point = tuple[float, float]
BBox = tuple[float, float, float, float]


class DegenerateLineError(ValueError):
    """Line through two identical points is undefined."""


def distance(p: Point, q: Point) -> float:
    """Euclidean distance (hypotenuse of the coordinate differences)."""
    return math.hypot(q[0] - p[0], q[1] - p[1])


def px_to_mm(value_px: float, mm_per_px: float) -> float:
    if mm_per_px <= 0:
        raise ValueError("mm_per_px must be positive")
    return value_px * mm_per_px


def mm_to_px(value_mm: float, mm_per_px: float) -> float:
    if mm_per_px <= 0:
        raise ValueError("mm_per_px must be positive")
    return value_mm / mm_per_px


@dataclass(frozen=True)
class LineABC:
    """Implicit line through two points.

    Coefficients follow the convention a = x2 - x1, b = y2 - y1,
    c = -b*y1 - a*x1. With (a, b) being the segment direction, membership is
    evaluated with the point-direction form a*(y - y1) - b*(x - x1), which is
    exactly zero at both defining points.
    """

    a: float
    b: float
    c: float
    x1: float
    y1: float

    def eval_at(self, p: Point) -> float:
        """Signed side value; zero on the line through the defining points."""
        return self.a * (p[1] - self.y1) - self.b * (p[0] - self.x1)

    def contains(self, p: Point, tol: float = 1e-9) -> bool:
        scale = max(1.0, math.hypot(p[0], p[1]))
        return abs(self.eval_at(p)) <= tol * scale


def line_through(p1: Point, p2: Point) -> LineABC:
    """Implicit line through two distinct points."""
    if p1 == p2:
        raise DegenerateLineError(f"identical points {p1}")
    a = p2[0] - p1[0]
    b = p2[1] - p1[1]
    c = -b * p1[1] - a * p1[0]
    return LineABC(a, b, c, p1[0], p1[1])


def bbox_corners(box: BBox) -> tuple[Point, Point, Point, Point]:
    """Corners in TL, TR, BR, BL order."""
    x_min, y_min, x_max, y_max = box
    return ((x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max))


def bbox_center(box: BBox) -> Point:
    return ((box[0] + box[2]) / 2.0, (box[1] + box[3]) / 2.0)


def inflate(box: BBox, amount: float) -> BBox:
    """Grow a box outward by `amount` on every side."""
    if amount < 0:
        raise ValueError("inflation must be non-negative")
    return (box[0] - amount, box[1] - amount, box[2] + amount, box[3] + amount)


def validate_bbox(box: BBox) -> None:
    if box[0] > box[2] or box[1] > box[3]:
        raise ValueError(f"inverted bbox {box}")


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence[Point]) -> tuple[Point, ...]:
    """Strict convex hull (collinear and interior points dropped), CCW.

    Monotone chain; the first vertex is the lexicographically smallest point,
    matching the ordering contract of Corridor. Degenerate inputs yield a
    single point or a two-point segment.
    """
    pts = sorted(set(points))
    if len(pts) <= 2:
        return tuple(pts)

    def half(seq: list[Point]) -> list[Point]:
        out: list[Point] = []
        for p in seq:
            while len(out) >= 2 and _cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 0:
        return (pts[0],)
    # lower starts at the lexicographic minimum; with cross > 0 kept the
    # resulting cycle runs counter-clockwise in a y-up frame.
    return tuple(hull)


@dataclass(frozen=True)
class Corridor:
    """Convex region swept by a rectangle translated from start to goal."""

    vertices: tuple[Point, ...]

    def __post_init__(self) -> None:
        if not self.vertices:
            raise ValueError("corridor needs at least one vertex")


def corridor(start_bbox: BBox, goal: Point) -> Corridor:
    """Swept region of `start_bbox` sliding until its center sits on `goal`.

    The eight generating points are the four corners of the start box plus
    the same corners translated by (goal - box center).
    """
    validate_bbox(start_bbox)
    cx, cy = bbox_center(start_bbox)
    dx, dy = goal[0] - cx, goal[1] - cy
    corners = bbox_corners(start_bbox)
    moved = tuple((x + dx, y + dy) for x, y in corners)
    return Corridor(convex_hull(corners + moved))


def _project(points: Sequence[Point], axis: Point) -> tuple[float, float]:
    vals = [p[0] * axis[0] + p[1] * axis[1] for p in points]
    return min(vals), max(vals)


def blocks(region: Corridor, box: BBox) -> bool:
    """Separating-axis intersection test; touching counts as blocked.

    Axes are the box normals (x, y) plus the outward normals of every hull
    edge. Exact for convex polygon vs axis-aligned rectangle.
    """
    validate_bbox(box)
    poly = region.vertices
    rect = bbox_corners(box)

    # Box axes double as the degenerate-polygon bounding test.
    lo, hi = _project(poly, (1.0, 0.0))
    if hi < box[0] or lo > box[2]:
        return False
    lo, hi = _project(poly, (0.0, 1.0))
    if hi < box[1] or lo > box[3]:
        return False

    n = len(poly)
    if n >= 2:
        for i in range(n if n > 2 else 1):
            x0, y0 = poly[i]
            x1, y1 = poly[(i + 1) % n]
            axis = (y0 - y1, x1 - x0)
            if axis == (0.0, 0.0):
                continue
            plo, phi = _project(poly, axis)
            rlo, rhi = _project(rect, axis)
            if phi < rlo or plo > rhi:
                return False
    return True


def point_bbox_distance(p: Point, box: BBox) -> float:
    """Euclidean distance from a point to a closed box (0 inside)."""
    dx = max(box[0] - p[0], 0.0, p[0] - box[2])
    dy = max(box[1] - p[1], 0.0, p[1] - box[3])
    return math.hypot(dx, dy)


def point_segment_distance(c: Point, p: Point, q: Point) -> float:
    vx, vy = q[0] - p[0], q[1] - p[1]
    wx, wy = c[0] - p[0], c[1] - p[1]
    vv = vx * vx + vy * vy
    if vv == 0.0:
        return math.hypot(wx, wy)
    t = (wx * vx + wy * vy) / vv
    t = min(1.0, max(0.0, t))
    return math.hypot(wx - t * vx, wy - t * vy)


def segment_intersects_bbox(p: Point, q: Point, box: BBox) -> bool:
    """Closed intersection test between a segment and a box.

    Same separating axes as blocks() specialized to a two-vertex polygon:
    x, y and the segment normal; exact, touching counts as intersecting.
    """
    if max(p[0], q[0]) < box[0] or min(p[0], q[0]) > box[2]:
        return False
    if max(p[1], q[1]) < box[1] or min(p[1], q[1]) > box[3]:
        return False
    dx, dy = q[0] - p[0], q[1] - p[1]
    if dx == 0.0 and dy == 0.0:
        return True
    sides = [dx * (cy - p[1]) - dy * (cx - p[0]) for cx, cy in bbox_corners(box)]
    return min(sides) <= 0.0 <= max(sides)


def segment_bbox_distance(p: Point, q: Point, box: BBox) -> float:
    """Euclidean distance between a segment and a closed box (0 if they meet).

    For disjoint convex sets the minimum is attained vertex-to-feature, so
    the candidates are the segment endpoints against the box and the box
    corners against the segment.
    """
    if segment_intersects_bbox(p, q, box):
        return 0.0
    best = min(point_bbox_distance(p, box), point_bbox_distance(q, box))
    for corner in bbox_corners(box):
        best = min(best, point_segment_distance(corner, p, q))
    return best
