"""Visibility-style route graphs around blocking obstacles.

Only obstacles that actually stand between a platform (or one of the
existing detour nodes) and its goal contribute nodes: four candidates per
obstacle, one per bbox corner, displaced outward along the corner diagonal
by the clearance radius. Candidates outside the frame, too close to another
obstacle, or unreachable from every other candidate are dropped.

Costs are Euclidean distances; an edge exists when the straight segment
between its endpoints keeps at least the edge clearance from every obstacle
box. math.inf marks absent edges.

Node ids are 1-based: 1 is the source (platform centroid), the corner nodes
follow in obstacle order (TL, TR, BR, BL each), and the last id is the sink
(goal). For several platforms over one scene the corner-to-corner block K is
built once and each platform contributes only its border vectors (source->
corner and corner->sink costs) plus the direct source<->sink entry, so a
full per-platform matrix is an assembly, not a rebuild.

Clearance convention: node_clearance = half platform diagonal + margin
(corner offset); edge_clearance = node_clearance / sqrt(2), the exact
distance at which a route hugs a box side while rounding adjacent corners.
Edges pass when the segment-to-box distance is >= edge_clearance - 1e-6;
the slack absorbs last-ulp rounding of the 45-degree offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

from .geometry import (
    BBox,
    Point,
    blocks,
    corridor,
    distance,
    inflate,
    point_bbox_distance,
    segment_bbox_distance,
)
from .scene_vision import SceneObject

INFINITY = math.inf
CLEARANCE_EPS_PX = 1e-6

NodeKind = Literal["source", "corner", "sink"]


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    pos: Point
    obstacle: int | None = None
    corner: int | None = None
    platform_id: str | None = None

    def to_record(self) -> dict:
        rec: dict = {"id": self.id, "kind": self.kind, "pos": [self.pos[0], self.pos[1]]}
        if self.obstacle is not None:
            rec["obstacle"] = self.obstacle
            rec["corner"] = self.corner
        if self.platform_id is not None:
            rec["platform_id"] = self.platform_id
        return rec


@dataclass(frozen=True)
class CornerNode:
    """Feasible corner candidate prior to id assignment."""

    obstacle: int
    corner: int  # 0 TL, 1 TR, 2 BR, 3 BL
    pos: Point


@dataclass
class RouteGraph:
    nodes: list[Node]
    cost: list[list[float]]

    def __post_init__(self) -> None:
        m = len(self.nodes)
        if m < 2:
            raise ValueError("graph needs at least source and sink")
        if [n.id for n in self.nodes] != list(range(1, m + 1)):
            raise ValueError("node ids must be 1..m in order")
        if self.nodes[0].kind != "source" or self.nodes[-1].kind != "sink":
            raise ValueError("node 1 must be the source and node m the sink")
        if len(self.cost) != m or any(len(row) != m for row in self.cost):
            raise ValueError("cost matrix must be m x m")
        for i in range(m):
            if self.cost[i][i] != 0.0:
                raise ValueError("diagonal must be zero")
            for j in range(m):
                c = self.cost[i][j]
                if c != self.cost[j][i]:
                    raise ValueError(f"cost not symmetric at ({i + 1},{j + 1})")
                if c < 0.0:
                    raise ValueError("costs must be non-negative")

    @property
    def m(self) -> int:
        return len(self.nodes)

    def to_json_dict(self) -> dict:
        return {
            "nodes": [n.to_record() for n in self.nodes],
            "cost": [
                [None if c == INFINITY else c for c in row] for row in self.cost
            ],
        }


def m_max(n_obstacles: int, n_terminals_pairs: int = 1) -> int:
    """Upper bound on matrix size: 4 nodes per obstacle + 2 per platform."""
    if n_obstacles < 0 or n_terminals_pairs < 1:
        raise ValueError("need n_obstacles >= 0 and at least one platform")
    return n_obstacles * 4 + 2 * n_terminals_pairs


def node_clearance_px(platform_w_px: float, platform_h_px: float, margin_px: float) -> float:
    """Corner-node offset: half platform diagonal plus safety margin."""
    if platform_w_px <= 0 or platform_h_px <= 0 or margin_px < 0:
        raise ValueError("platform dims must be positive, margin non-negative")
    return math.hypot(platform_w_px, platform_h_px) / 2.0 + margin_px


def edge_clearance_px(node_clearance: float) -> float:
    return node_clearance / math.sqrt(2.0)


def footprint_at(center: Point, w_px: float, h_px: float) -> BBox:
    return (
        center[0] - w_px / 2.0,
        center[1] - h_px / 2.0,
        center[0] + w_px / 2.0,
        center[1] + h_px / 2.0,
    )


def gen_candidate_nodes(obstacle_bbox: BBox, clearance_px: float) -> tuple[Point, ...]:
    """Four corner candidates, TL/TR/BR/BL, each displaced outward along its
    45-degree diagonal so it sits exactly `clearance_px` from the corner."""
    if clearance_px <= 0:
        raise ValueError("clearance must be positive")
    x_min, y_min, x_max, y_max = obstacle_bbox
    k = clearance_px / math.sqrt(2.0)
    return (
        (x_min - k, y_min - k),
        (x_max + k, y_min - k),
        (x_max + k, y_max + k),
        (x_min - k, y_max + k),
    )


def real_obstacles(
    platform_bbox: BBox,
    goal: Point,
    obstacles: Sequence[SceneObject],
    clearance_px: float,
) -> tuple[list[int], list[int]]:
    """Split obstacle indices into (blocking, non-blocking) for one corridor.

    An obstacle blocks when the swept platform box from its current pose to
    the goal intersects the obstacle bbox inflated by the edge clearance
    (touching counts).
    """
    sweep = corridor(platform_bbox, goal)
    grow = edge_clearance_px(clearance_px)
    blocking: list[int] = []
    clear: list[int] = []
    for idx, obs in enumerate(obstacles):
        if blocks(sweep, inflate(obs.bbox_f, grow)):
            blocking.append(idx)
        else:
            clear.append(idx)
    return blocking, clear


def expand_active_obstacles(
    footprints_goals: Sequence[tuple[BBox, Point]],
    obstacles: Sequence[SceneObject],
    clearance_px: float,
    platform_dims: tuple[float, float],
) -> list[int]:
    """Active obstacle set: blocks some source->goal corridor, or blocks a
    node->goal corridor from a node of an already-active obstacle. Iterated
    to a fixpoint (activation is monotone, so order cannot matter)."""
    active: set[int] = set()
    for fp, goal in footprints_goals:
        blocking, _ = real_obstacles(fp, goal, obstacles, clearance_px)
        active.update(blocking)
    w, h = platform_dims
    grow = edge_clearance_px(clearance_px)
    changed = True
    while changed:
        changed = False
        probes = [
            pos
            for idx in active
            for pos in gen_candidate_nodes(obstacles[idx].bbox_f, clearance_px)
        ]
        for pos in probes:
            for _, goal in footprints_goals:
                sweep = corridor(footprint_at(pos, w, h), goal)
                for idx, obs in enumerate(obstacles):
                    if idx in active:
                        continue
                    if blocks(sweep, inflate(obs.bbox_f, grow)):
                        active.add(idx)
                        changed = True
    return sorted(active)


def edge_cost(
    p: Point, q: Point, obstacles: Sequence[SceneObject], edge_clearance: float
) -> float:
    """Euclidean cost when the segment keeps clearance from every box."""
    for obs in obstacles:
        if segment_bbox_distance(p, q, obs.bbox_f) < edge_clearance - CLEARANCE_EPS_PX:
            return INFINITY
    return distance(p, q)


def filter_feasible(
    candidates: Sequence[CornerNode],
    obstacles: Sequence[SceneObject],
    bounds: tuple[int, int],
    clearance_px: float,
) -> list[CornerNode]:
    """Keep candidates inside the frame, clear of every other obstacle, and
    not isolated (at least one feasible edge to another surviving candidate).

    The isolation pass drops whole batches per round until a fixpoint, so
    the result does not depend on candidate order. Terminals are not
    consulted: the surviving set must be platform-independent because the
    corner-to-corner block is shared between platforms.
    """
    width, height = bounds
    edge_clear = edge_clearance_px(clearance_px)
    kept: list[CornerNode] = []
    for cand in candidates:
        x, y = cand.pos
        if not (0 <= x < width and 0 <= y < height):
            continue
        clear = True
        for idx, obs in enumerate(obstacles):
            if idx == cand.obstacle:
                continue  # own corner sits at exactly the node clearance
            if point_bbox_distance(cand.pos, obs.bbox_f) + 1e-9 < clearance_px:
                clear = False
                break
        if clear:
            kept.append(cand)

    while len(kept) > 1:
        isolated = []
        for i, cand in enumerate(kept):
            if not any(
                edge_cost(cand.pos, other.pos, obstacles, edge_clear) != INFINITY
                for j, other in enumerate(kept)
                if j != i
            ):
                isolated.append(i)
        if not isolated:
            break
        kept = [c for i, c in enumerate(kept) if i not in set(isolated)]
    return kept


def candidates_for(
    obstacle_indices: Sequence[int],
    obstacles: Sequence[SceneObject],
    clearance_px: float,
) -> list[CornerNode]:
    out = []
    for idx in obstacle_indices:
        for corner, pos in enumerate(gen_candidate_nodes(obstacles[idx].bbox_f, clearance_px)):
            out.append(CornerNode(idx, corner, pos))
    return out


def _graph_nodes(
    source: Point, sink: Point, corner_nodes: Sequence[CornerNode], platform_id: str | None
) -> list[Node]:
    nodes = [Node(1, "source", source, platform_id=platform_id)]
    for k, cand in enumerate(corner_nodes):
        nodes.append(Node(k + 2, "corner", cand.pos, obstacle=cand.obstacle, corner=cand.corner))
    nodes.append(Node(len(corner_nodes) + 2, "sink", sink, platform_id=platform_id))
    return nodes


def build_adjacency(
    source: Point,
    sink: Point,
    corner_nodes: Sequence[CornerNode],
    obstacles: Sequence[SceneObject],
    clearance_px: float,
    platform_id: str | None = None,
) -> RouteGraph:
    """Full cost matrix from scratch for one platform."""
    edge_clear = edge_clearance_px(clearance_px)
    positions = [source] + [c.pos for c in corner_nodes] + [sink]
    m = len(positions)
    cost = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            c = edge_cost(positions[i], positions[j], obstacles, edge_clear)
            cost[i][j] = c
            cost[j][i] = c
    return RouteGraph(_graph_nodes(source, sink, corner_nodes, platform_id), cost)


@dataclass(frozen=True)
class BaseMatrix:
    """Corner-to-corner block K, shared by every platform on the scene."""

    corner_nodes: tuple[CornerNode, ...]
    k: tuple[tuple[float, ...], ...]

    @property
    def q(self) -> int:
        return len(self.corner_nodes)


@dataclass(frozen=True)
class PlatformPair:
    """Per-platform border data: terminals plus their edge-cost vectors."""

    platform_id: str
    source: Point
    sink: Point
    a: tuple[float, ...]  # source -> corner node costs
    b: tuple[float, ...]  # corner node -> sink costs
    direct_cost: float  # source <-> sink, inf when obstructed


def build_base_matrix(
    corner_nodes: Sequence[CornerNode],
    obstacles: Sequence[SceneObject],
    clearance_px: float,
) -> BaseMatrix:
    edge_clear = edge_clearance_px(clearance_px)
    q = len(corner_nodes)
    k = [[0.0] * q for _ in range(q)]
    for i in range(q):
        for j in range(i + 1, q):
            c = edge_cost(corner_nodes[i].pos, corner_nodes[j].pos, obstacles, edge_clear)
            k[i][j] = c
            k[j][i] = c
    return BaseMatrix(tuple(corner_nodes), tuple(tuple(row) for row in k))


def build_platform_pair(
    platform_id: str,
    source: Point,
    sink: Point,
    corner_nodes: Sequence[CornerNode],
    obstacles: Sequence[SceneObject],
    clearance_px: float,
) -> PlatformPair:
    edge_clear = edge_clearance_px(clearance_px)
    a = tuple(edge_cost(source, c.pos, obstacles, edge_clear) for c in corner_nodes)
    b = tuple(edge_cost(c.pos, sink, obstacles, edge_clear) for c in corner_nodes)
    direct = edge_cost(source, sink, obstacles, edge_clear)
    return PlatformPair(platform_id, source, sink, a, b, direct)


def assemble_platform_matrix(base: BaseMatrix, pair: PlatformPair) -> RouteGraph:
    """Compose the per-platform matrix from K and the border vectors.

    Layout: row/col 1 is the source bordered by a_i, rows 2..q+1 are K,
    row/col q+2 is the sink bordered by b_i; the source<->sink corners take
    the direct corridor cost.
    """
    q = base.q
    if len(pair.a) != q or len(pair.b) != q:
        raise ValueError("border vectors must match the base matrix size")
    m = q + 2
    cost = [[0.0] * m for _ in range(m)]
    for j in range(q):
        cost[0][j + 1] = pair.a[j]
        cost[j + 1][0] = pair.a[j]
        cost[m - 1][j + 1] = pair.b[j]
        cost[j + 1][m - 1] = pair.b[j]
        for i in range(q):
            cost[i + 1][j + 1] = base.k[i][j]
    cost[0][m - 1] = pair.direct_cost
    cost[m - 1][0] = pair.direct_cost
    nodes = _graph_nodes(pair.source, pair.sink, base.corner_nodes, pair.platform_id)
    return RouteGraph(nodes, cost)


def occlude_boxes(
    graph: RouteGraph, boxes: Sequence[BBox], edge_clearance: float
) -> RouteGraph:
    """New graph with edges passing too close to any extra box set to inf.

    Used to overlay transient occupancy (other platforms) on a matrix built
    from static obstacles only; blocking is monotone, so entries only move
    toward inf.
    """
    if not boxes:
        return graph
    m = graph.m
    cost = [row[:] for row in graph.cost]
    positions = [n.pos for n in graph.nodes]
    for i in range(m):
        for j in range(i + 1, m):
            if cost[i][j] == INFINITY:
                continue
            for box in boxes:
                if segment_bbox_distance(positions[i], positions[j], box) < edge_clearance - CLEARANCE_EPS_PX:
                    cost[i][j] = INFINITY
                    cost[j][i] = INFINITY
                    break
    return RouteGraph(graph.nodes, cost)
