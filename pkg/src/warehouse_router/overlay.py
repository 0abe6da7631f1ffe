"""Annotated frame rendering (pure numpy, pixmap out).

Box colors follow the scene semantics: platforms green, goals red,
obstacles black, auxiliary blue; obstacles that take part in planning get
a blue frame, corner nodes cyan markers, routes green polylines.
"""

from __future__ import annotations

import numpy as np

from .frames import Frame
from .pipeline import SceneState
from .scene_vision import Role

COLOR_BY_ROLE = {
    Role.PLATFORM: (0, 200, 0),
    Role.GOAL: (220, 0, 0),
    Role.OBSTACLE: (0, 0, 0),
    Role.AUXILIARY: (0, 0, 220),
}
ACTIVE_COLOR = (0, 0, 255)
NODE_COLOR = (0, 200, 200)
ROUTE_COLOR = (0, 180, 0)
GOAL_MARK_COLOR = (255, 0, 0)


def _clip(v: int, lo: int, hi: int) -> int:
    return max(lo, min(hi, v))


def _draw_rect(img: np.ndarray, box, color) -> None:
    h, w = img.shape[:2]
    x0, y0, x1, y1 = (int(round(v)) for v in box)
    x0, x1 = _clip(x0, 0, w - 1), _clip(x1, 0, w - 1)
    y0, y1 = _clip(y0, 0, h - 1), _clip(y1, 0, h - 1)
    img[y0, x0 : x1 + 1] = color
    img[y1, x0 : x1 + 1] = color
    img[y0 : y1 + 1, x0] = color
    img[y0 : y1 + 1, x1] = color


def _draw_line(img: np.ndarray, p, q, color) -> None:
    h, w = img.shape[:2]
    x0, y0 = int(round(p[0])), int(round(p[1]))
    x1, y1 = int(round(q[0])), int(round(q[1]))
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        if 0 <= x0 < w and 0 <= y0 < h:
            img[y0, x0] = color
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _draw_marker(img: np.ndarray, p, color, radius: int = 2) -> None:
    h, w = img.shape[:2]
    x, y = int(round(p[0])), int(round(p[1]))
    y0, y1 = _clip(y - radius, 0, h - 1), _clip(y + radius, 0, h - 1)
    x0, x1 = _clip(x - radius, 0, w - 1), _clip(x + radius, 0, w - 1)
    img[y0 : y1 + 1, x0 : x1 + 1] = color


def render_annotated(frame: Frame, state: SceneState) -> Frame:
    img = frame.as_array().copy()
    for obj in state.objects:
        _draw_rect(img, obj.bbox, COLOR_BY_ROLE[obj.cls.role])
    for idx in state.active_obstacles:
        if idx < len(state.planning_obstacles):
            _draw_rect(img, state.planning_obstacles[idx].bbox, ACTIVE_COLOR)
    for result in state.platforms.values():
        if result.goal is not None:
            _draw_marker(img, result.goal, GOAL_MARK_COLOR, radius=3)
        if result.graph is None:
            continue
        for node in result.graph.nodes:
            if node.kind == "corner":
                _draw_marker(img, node.pos, NODE_COLOR)
        if result.route is not None:
            waypoints = [result.graph.nodes[i - 1].pos for i in result.route.path]
            for k in range(len(waypoints) - 1):
                _draw_line(img, waypoints[k], waypoints[k + 1], ROUTE_COLOR)
    return Frame.from_array(img, frame.mm_per_px)
