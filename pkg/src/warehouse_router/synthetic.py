"""Deterministic synthetic scenes for benches and integration tests.

Scenes are white floors with one colored platform box per configured id on
the left, a goal zone on the right, and obstacle rectangles scattered in
between. Obstacle spacing starts generous and relaxes toward the merge
threshold until the requested count fits, so busier scenes still generate.
"""

from __future__ import annotations

import random

import numpy as np

from .frames import Frame
from .pipeline import PipelineConfig, default_config
from .scene_vision import Role

PLATFORM_FILL = (0, 220, 0)
GOAL_FILL = (220, 0, 0)
OBSTACLE_FILL = (20, 20, 20)
AUX_FILL = (0, 0, 220)


def _paint(img: np.ndarray, box: tuple[int, int, int, int], color) -> None:
    x0, y0, x1, y1 = box
    img[y0 : y1 + 1, x0 : x1 + 1] = color


def _bbox_gap(a, b) -> int:
    gx = max(a[0] - b[2], b[0] - a[2], 0)
    gy = max(a[1] - b[3], b[1] - a[3], 0)
    return max(gx, gy)


def _class_fill(
    cfg: PipelineConfig,
    role: Role,
    platform_id: str | None = None,
    fallback: tuple[int, int, int] = (0, 0, 0),
) -> tuple[int, int, int]:
    """Midpoint of the matching color range, so any config segments its own
    scenes."""
    for c in cfg.classes:
        if c.role is role and (platform_id is None or c.platform_id == platform_id):
            return tuple((int(lo) + int(hi)) // 2 for lo, hi in zip(c.lo, c.hi))
    return fallback


def _try_place(
    rng: random.Random,
    n: int,
    width: int,
    height: int,
    margin: int,
    spacing: int,
    keepout: list[tuple[int, int, int, int]],
) -> list[tuple[int, int, int, int]] | None:
    boxes: list[tuple[int, int, int, int]] = []
    attempts = 0
    while len(boxes) < n and attempts < 20000:
        attempts += 1
        w = rng.randint(24, 60)
        h = rng.randint(24, 60)
        x0 = rng.randint(130 + margin, width - 140 - margin - w)
        y0 = rng.randint(margin, height - margin - h - 1)
        box = (x0, y0, x0 + w - 1, y0 + h - 1)
        if any(_bbox_gap(box, other) < spacing for other in boxes):
            continue
        if any(_bbox_gap(box, zone) < margin + 6 for zone in keepout):
            continue
        boxes.append(box)
    return boxes if len(boxes) == n else None


def gen_scene(
    width: int = 640,
    height: int = 480,
    n_obstacles: int = 6,
    seed: int = 0,
    config: PipelineConfig | None = None,
    with_goal_zone: bool = True,
) -> tuple[Frame, PipelineConfig]:
    """A solvable scene: obstacles never crowd the border, the platform
    starts, the goal zone, or each other below the passable-corridor width."""
    cfg = config if config is not None else default_config()
    img = np.full((height, width, 3), 255, dtype=np.uint8)

    margin = int(cfg.node_clearance_px) + 4

    pids = cfg.platform_ids()
    step = 40 + margin
    platform_boxes: dict[str, tuple[int, int, int, int]] = {}
    for i, pid in enumerate(pids):
        cy = height // 2 + round((i - (len(pids) - 1) / 2) * step)
        box = (40, cy - 20, 79, cy + 19)
        if box[1] < margin or box[3] >= height - margin:
            raise ValueError(f"frame too small for {len(pids)} platforms")
        platform_boxes[pid] = box
    goal_box = (width - 70, height // 2 - 20, width - 31, height // 2 + 19)
    keepout = list(platform_boxes.values()) + [goal_box]

    base = int(cfg.min_corridor_px)
    boxes = None
    for extra in (2 * margin, margin, 12):
        boxes = _try_place(
            random.Random(seed), n_obstacles, width, height, margin, base + extra, keepout
        )
        if boxes is not None:
            break
    if boxes is None:
        raise ValueError(f"could not place {n_obstacles} obstacles in {width}x{height}")

    for pid, box in platform_boxes.items():
        _paint(img, box, _class_fill(cfg, Role.PLATFORM, pid, PLATFORM_FILL))
    if with_goal_zone:
        _paint(img, goal_box, _class_fill(cfg, Role.GOAL, fallback=GOAL_FILL))
    for box in boxes:
        _paint(img, box, _class_fill(cfg, Role.OBSTACLE, fallback=OBSTACLE_FILL))

    return Frame.from_array(img, cfg.mm_per_px), cfg
