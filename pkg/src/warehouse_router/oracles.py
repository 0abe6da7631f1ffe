"""Independent cross-checks for the planning pipeline.

Every function here re-derives a result by brute force or enumeration,
without touching the production code paths it certifies: route optimality
by enumerating all simple paths, flow vectors by path decomposition,
corridor blocking by rasterized overlap, segment clearance by an
edge-to-edge distance formulation, and pixel segmentation by a plain
union-find over pixel pairs. Tests and the `oracle` CLI subcommand share
these.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .geometry import BBox, Corridor, Point
from .route_graph import RouteGraph
from .shortest_path import FlowVector, Route

INFINITY = math.inf


def brute_force_route(
    graph: RouteGraph, source: int = 1, sink: int | None = None
) -> Route | None:
    """Minimum over all simple source->sink paths by full enumeration.

    The order is (cost, hops, node sequence), matching the solver's
    tie-break. Costs accumulate left to right along the path so a tie on
    the same path compares bit-identically.
    """
    m = graph.m
    sink = m if sink is None else sink
    cost = graph.cost
    best: tuple[float, int, tuple[int, ...]] | None = None

    visited = [False] * (m + 1)

    def walk(node: int, acc: float, path: tuple[int, ...]) -> None:
        nonlocal best
        if node == sink:
            label = (acc, len(path) - 1, path)
            if best is None or label < best:
                best = label
            return
        visited[node] = True
        row = cost[node - 1]
        for nxt in range(1, m + 1):
            c = row[nxt - 1]
            if nxt == node or visited[nxt] or c == INFINITY:
                continue
            walk(nxt, acc + c, path + (nxt,))
        visited[node] = False

    walk(source, 0.0, (source,))
    if best is None:
        return None
    return Route(best[2], best[0])


def decompose_unit_flow(
    x: FlowVector, source: int, sink: int
) -> tuple[tuple[int, ...] | None, dict]:
    """Follow unit arcs from the source; (path, leftover flow).

    path is None when the vector is not even a clean walk (non-unit values,
    branching, dead end, or revisiting a node). leftover holds whatever flow
    the walk did not consume (a disjoint circulation, for instance).
    """
    remaining = {arc: v for arc, v in x.items() if v != 0.0}
    if any(v != 1.0 for v in remaining.values()):
        return None, remaining
    path = [source]
    seen = {source}
    node = source
    while node != sink:
        outs = [arc for arc in remaining if arc[0] == node]
        if len(outs) != 1:
            return None, remaining
        arc = outs[0]
        del remaining[arc]
        node = arc[1]
        if node in seen:
            return None, remaining
        seen.add(node)
        path.append(node)
    return tuple(path), remaining


def is_simple_path_flow(x: FlowVector, source: int, sink: int) -> bool:
    """True iff x is exactly the indicator of one simple source->sink path."""
    path, leftover = decompose_unit_flow(x, source, sink)
    return path is not None and not leftover


def point_in_convex(poly: Sequence[Point], p: Point) -> bool:
    """Closed membership in a CCW convex polygon (degenerate cases included)."""
    n = len(poly)
    if n == 1:
        return p == poly[0]
    if n == 2:
        (x0, y0), (x1, y1) = poly
        cross = (x1 - x0) * (p[1] - y0) - (y1 - y0) * (p[0] - x0)
        if cross != 0.0:
            return False
        return (
            min(x0, x1) <= p[0] <= max(x0, x1)
            and min(y0, y1) <= p[1] <= max(y0, y1)
        )
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (x1 - x0) * (p[1] - y0) - (y1 - y0) * (p[0] - x0) < 0.0:
            return False
    return True


def rasterized_overlap(region: Corridor, box: BBox, step: float = 0.25) -> bool:
    """Grid-sample the box for any point inside the hull.

    Sound but not complete: finding a sample proves overlap; finding none
    only bounds the overlap area by the grid resolution.
    """
    poly = region.vertices
    xs_lo = max(box[0], min(p[0] for p in poly))
    xs_hi = min(box[2], max(p[0] for p in poly))
    ys_lo = max(box[1], min(p[1] for p in poly))
    ys_hi = min(box[3], max(p[1] for p in poly))
    if xs_lo > xs_hi or ys_lo > ys_hi:
        return False
    nx = max(1, int((xs_hi - xs_lo) / step) + 1)
    ny = max(1, int((ys_hi - ys_lo) / step) + 1)
    for iy in range(ny + 1):
        y = min(ys_lo + iy * step, ys_hi)
        for ix in range(nx + 1):
            x = min(xs_lo + ix * step, xs_hi)
            if point_in_convex(poly, (x, y)):
                return True
    return False


def _seg_seg_distance(p1: Point, p2: Point, q1: Point, q2: Point) -> float:
    """Closed-form distance between two segments (intersection -> 0)."""

    def orient(a: Point, b: Point, c: Point) -> float:
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a: Point, b: Point, c: Point) -> bool:
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return 0.0
    for a, b, c, d in ((q1, q2, p1, d1), (q1, q2, p2, d2), (p1, p2, q1, d3), (p1, p2, q2, d4)):
        if d == 0.0 and on_seg(a, b, c):
            return 0.0

    def pt_seg(c: Point, a: Point, b: Point) -> float:
        vx, vy = b[0] - a[0], b[1] - a[1]
        wx, wy = c[0] - a[0], c[1] - a[1]
        vv = vx * vx + vy * vy
        t = 0.0 if vv == 0.0 else min(1.0, max(0.0, (wx * vx + wy * vy) / vv))
        return math.hypot(wx - t * vx, wy - t * vy)

    return min(
        pt_seg(p1, q1, q2),
        pt_seg(p2, q1, q2),
        pt_seg(q1, p1, p2),
        pt_seg(q2, p1, p2),
    )


def segment_box_distance_by_edges(p: Point, q: Point, box: BBox) -> float:
    """Segment-to-box distance via the four box edges.

    Independent formulation: a segment either touches an edge, lies fully
    inside, or attains its minimum against one of the edge segments.
    """
    x0, y0, x1, y1 = box
    if x0 <= p[0] <= x1 and y0 <= p[1] <= y1:
        return 0.0
    if x0 <= q[0] <= x1 and y0 <= q[1] <= y1:
        return 0.0
    edges = (
        ((x0, y0), (x1, y0)),
        ((x1, y0), (x1, y1)),
        ((x1, y1), (x0, y1)),
        ((x0, y1), (x0, y0)),
    )
    return min(_seg_seg_distance(p, q, a, b) for a, b in edges)


def union_find_segmentation(
    pixels: Iterable[tuple[int, int]], gap_px: int
) -> list[set[tuple[int, int]]]:
    """Group pixels by chains of steps within gap_px per axis (pure Python).

    Quadratic in pixel count; only for cross-checking the production
    labeling on small masks.
    """
    pts = sorted(set(pixels))
    parent = list(range(len(pts)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if (
                abs(pts[i][0] - pts[j][0]) <= gap_px
                and abs(pts[i][1] - pts[j][1]) <= gap_px
            ):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, set[tuple[int, int]]] = {}
    for i, p in enumerate(pts):
        groups.setdefault(find(i), set()).add(p)
    return sorted(groups.values(), key=lambda s: sorted(s)[0])
