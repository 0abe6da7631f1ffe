"""Per-frame orchestration: pixels in, routes and motion vectors out.

Stages per frame: classify pixels, segment objects per class, merge
impassable obstacle gaps, then for each platform pick its goal, select the
obstacles that actually block somebody (union across platforms, expanded
iteratively), assemble its matrix from the shared corner-to-corner block
plus its border vectors, run the solver and derive motion vectors. Other
platforms never contribute corner nodes; their boxes only knock out edges
of the assembled matrix, which keeps the shared block valid for everyone.

process_frame is a pure function of (frame, config, seq): identical inputs
give a byte-identical state JSON apart from the timing row. Dispatch is the
controller's job, after the state exists.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable

from . import route_graph as rg
from .dispatch import MotionVector, route_to_motion
from .frames import DEFAULT_MM_PER_PX, Frame
from .geometry import point_bbox_distance
from .scene_vision import (
    DEFAULT_GAP_PX,
    DEFAULT_MIN_AREA_CM2,
    ColorClass,
    ConfigurationError,
    Role,
    SceneObject,
    classify_pixels,
    merge_impassable,
    min_area_pixels,
    segment_objects,
    validate_classes,
)
from .shortest_path import Route, dijkstra

CONFIG_ENV_VAR = "WAREHOUSE_ROUTER_CONFIG"


@dataclass(frozen=True)
class PlcEndpoint:
    host: str
    port: int
    db_number: int
    start_offset: int = 0


@dataclass(frozen=True)
class PipelineConfig:
    classes: tuple[ColorClass, ...]
    mm_per_px: float = DEFAULT_MM_PER_PX
    gap_px: int = DEFAULT_GAP_PX
    min_area_cm2: float = DEFAULT_MIN_AREA_CM2
    platform_w_px: float = 40.0
    platform_h_px: float = 40.0
    safety_margin_px: float = 5.0
    goals: dict[str, tuple[float, float]] = field(default_factory=dict)
    initial_heading_deg: dict[str, float] = field(default_factory=dict)
    plc: dict[str, PlcEndpoint] = field(default_factory=dict)

    def __post_init__(self) -> None:
        validate_classes(self.classes)
        if self.mm_per_px <= 0 or self.platform_w_px <= 0 or self.platform_h_px <= 0:
            raise ConfigurationError("scales and platform dims must be positive")
        if self.min_area_cm2 <= 0:
            raise ConfigurationError("area floor must be positive")
        if self.gap_px < 0 or self.safety_margin_px < 0:
            raise ConfigurationError("gap and margin must be non-negative")
        known = self.platform_ids()
        for pid in list(self.goals) + list(self.plc) + list(self.initial_heading_deg):
            if pid not in known:
                raise ConfigurationError(f"no platform color class for {pid!r}")

    def platform_ids(self) -> list[str]:
        return sorted(
            c.platform_id for c in self.classes if c.role is Role.PLATFORM
        )  # type: ignore[misc]

    @property
    def min_area_px(self) -> int:
        return min_area_pixels(self.min_area_cm2, self.mm_per_px)

    @property
    def node_clearance_px(self) -> float:
        return rg.node_clearance_px(
            self.platform_w_px, self.platform_h_px, self.safety_margin_px
        )

    @property
    def clearance_px(self) -> float:
        """Guaranteed route-to-obstacle distance (the edge clearance)."""
        return rg.edge_clearance_px(self.node_clearance_px)

    @property
    def min_corridor_px(self) -> float:
        """Narrowest gap the platform may drive through."""
        return max(self.platform_w_px, self.platform_h_px) + 2.0 * self.safety_margin_px

    def to_json_dict(self) -> dict:
        return {
            "mm_per_px": self.mm_per_px,
            "gap_px": self.gap_px,
            "min_area_cm2": self.min_area_cm2,
            "platform_w_px": self.platform_w_px,
            "platform_h_px": self.platform_h_px,
            "safety_margin_px": self.safety_margin_px,
            "classes": [
                {
                    "role": c.role.value,
                    "lo": list(c.lo),
                    "hi": list(c.hi),
                    **({"platform_id": c.platform_id} if c.platform_id else {}),
                }
                for c in self.classes
            ],
            "goals": {pid: list(goal) for pid, goal in sorted(self.goals.items())},
            "initial_heading_deg": dict(sorted(self.initial_heading_deg.items())),
            "plc": {
                pid: {
                    "host": ep.host,
                    "port": ep.port,
                    "db_number": ep.db_number,
                    "start_offset": ep.start_offset,
                }
                for pid, ep in sorted(self.plc.items())
            },
            "derived": {
                "min_area_px": self.min_area_px,
                "node_clearance_px": self.node_clearance_px,
                "clearance_px": self.clearance_px,
                "min_corridor_px": self.min_corridor_px,
            },
        }


def config_from_json_dict(data: dict) -> PipelineConfig:
    classes = tuple(
        ColorClass(
            Role(c["role"]),
            tuple(c["lo"]),  # type: ignore[arg-type]
            tuple(c["hi"]),  # type: ignore[arg-type]
            c.get("platform_id"),
        )
        for c in data["classes"]
    )
    plc = {
        pid: PlcEndpoint(ep["host"], ep["port"], ep["db_number"], ep.get("start_offset", 0))
        for pid, ep in data.get("plc", {}).items()
    }
    return PipelineConfig(
        classes=classes,
        mm_per_px=data.get("mm_per_px", DEFAULT_MM_PER_PX),
        gap_px=data.get("gap_px", DEFAULT_GAP_PX),
        min_area_cm2=data.get("min_area_cm2", DEFAULT_MIN_AREA_CM2),
        platform_w_px=data.get("platform_w_px", 40.0),
        platform_h_px=data.get("platform_h_px", 40.0),
        safety_margin_px=data.get("safety_margin_px", 5.0),
        goals={pid: tuple(g) for pid, g in data.get("goals", {}).items()},  # type: ignore[misc]
        initial_heading_deg=dict(data.get("initial_heading_deg", {})),
        plc=plc,
    )


def load_config(path: str) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_json_dict(json.load(fh))


def default_config() -> PipelineConfig:
    """Single green platform, red goal, black obstacles, blue auxiliary."""
    return PipelineConfig(
        classes=(
            ColorClass(Role.PLATFORM, (0, 150, 0), (120, 255, 120), "p1"),
            ColorClass(Role.GOAL, (150, 0, 0), (255, 120, 120)),
            ColorClass(Role.OBSTACLE, (0, 0, 0), (90, 90, 90)),
            ColorClass(Role.AUXILIARY, (0, 0, 150), (120, 120, 255)),
        )
    )


@dataclass
class PlatformResult:
    platform_id: str
    detected: SceneObject | None
    goal: tuple[float, float] | None
    graph: rg.RouteGraph | None
    route: Route | None
    motion: list[MotionVector]
    warnings: list[str]

    def to_json_dict(self, include_graph: bool = True) -> dict:
        rec: dict = {
            "platform_id": self.platform_id,
            "detected": self.detected.to_record() if self.detected else None,
            "goal": list(self.goal) if self.goal else None,
            "warnings": sorted(self.warnings),
            "route": {"found": False},
            "motion": [],
        }
        if self.route is not None and self.graph is not None:
            waypoints = [list(self.graph.nodes[i - 1].pos) for i in self.route.path]
            rec["route"] = {
                "found": True,
                "path": list(self.route.path),
                "cost_px": self.route.total_cost,
                "hops": self.route.hop_count,
                "waypoints_px": waypoints,
            }
            rec["motion"] = [
                {"turn_deg": v.turn_deg, "dist_mm": v.dist_mm} for v in self.motion
            ]
            rec["total_dist_mm"] = sum(v.dist_mm for v in self.motion)
        if include_graph and self.graph is not None:
            rec["graph"] = self.graph.to_json_dict()
        return rec


@dataclass
class SceneState:
    frame_seq: int
    width: int
    height: int
    mm_per_px: float
    objects: list[SceneObject]
    planning_obstacles: list[SceneObject]
    active_obstacles: list[int]
    platforms: dict[str, PlatformResult]
    warnings: list[str]
    timings_ms: dict[str, float]

    def to_json_dict(self, include_timings: bool = True, include_graphs: bool = True) -> dict:
        rec = {
            "frame_seq": self.frame_seq,
            "frame": {
                "width": self.width,
                "height": self.height,
                "mm_per_px": self.mm_per_px,
            },
            "objects": [o.to_record() for o in self.objects],
            "planning_obstacles": [o.to_record() for o in self.planning_obstacles],
            "active_obstacles": self.active_obstacles,
            "platforms": {
                pid: res.to_json_dict(include_graphs)
                for pid, res in sorted(self.platforms.items())
            },
            "warnings": sorted(self.warnings),
        }
        if include_timings:
            rec["timings_ms"] = self.timings_ms
        return rec

    def to_json(self, include_timings: bool = True, include_graphs: bool = True) -> str:
        return json.dumps(
            self.to_json_dict(include_timings, include_graphs),
            sort_keys=True,
            separators=(",", ":"),
        )


def _largest(objs: list[SceneObject]) -> SceneObject | None:
    if not objs:
        return None
    return max(objs, key=lambda o: (o.pixel_count, tuple(-v for v in o.bbox)))


def process_frame(frame: Frame, config: PipelineConfig, seq: int = 0) -> SceneState:
    timings: dict[str, float] = {}
    warnings: list[str] = []
    t0 = time.perf_counter()
    masks = classify_pixels(frame, config.classes)
    t1 = time.perf_counter()
    timings["classify_ms"] = (t1 - t0) * 1000.0

    mm = frame.mm_per_px
    objects: list[SceneObject] = []
    by_class: dict[ColorClass, list[SceneObject]] = {}
    for cls, mask in masks.items():
        objs = segment_objects(
            mask, cls, gap_px=config.gap_px,
            min_area_px=min_area_pixels(config.min_area_cm2, mm),
            mm_per_px=mm,
        )
        by_class[cls] = objs
        objects.extend(objs)
    t2 = time.perf_counter()
    timings["segment_ms"] = (t2 - t1) * 1000.0

    raw_obstacles = [o for o in objects if o.cls.role is Role.OBSTACLE]
    planning_obstacles = merge_impassable(raw_obstacles, config.min_corridor_px)
    t3 = time.perf_counter()
    timings["merge_ms"] = (t3 - t2) * 1000.0

    goal_objects = sorted(
        (o for o in objects if o.cls.role is Role.GOAL), key=lambda o: o.bbox
    )
    detected: dict[str, SceneObject | None] = {}
    for cls in config.classes:
        if cls.role is Role.PLATFORM:
            detected[cls.platform_id] = _largest(by_class.get(cls, []))  # type: ignore[index]

    clearance = config.node_clearance_px
    edge_clear = config.clearance_px
    dims = (config.platform_w_px, config.platform_h_px)
    bounds = (frame.width, frame.height)

    # goals resolve before obstacle activation so the active set can be the
    # union over platforms (the corner block K is shared)
    goals: dict[str, tuple[float, float]] = {}
    for pid in config.platform_ids():
        goal = config.goals.get(pid)
        if goal is None and goal_objects:
            goal = goal_objects[0].centroid
        if goal is not None and not (
            0 <= goal[0] < frame.width and 0 <= goal[1] < frame.height
        ):
            warnings.append(f"goal_out_of_bounds:{pid}")
            goal = None
        if goal is not None:
            goals[pid] = goal

    routed_pairs = [
        (detected[pid].bbox_f, goals[pid])  # type: ignore[union-attr]
        for pid in config.platform_ids()
        if detected.get(pid) is not None and pid in goals
    ]
    active = rg.expand_active_obstacles(routed_pairs, planning_obstacles, clearance, dims)
    candidates = rg.candidates_for(active, planning_obstacles, clearance)
    corner_nodes = rg.filter_feasible(candidates, planning_obstacles, bounds, clearance)
    base = rg.build_base_matrix(corner_nodes, planning_obstacles, clearance)

    platforms: dict[str, PlatformResult] = {}
    for pid in config.platform_ids():
        pwarn: list[str] = []
        obj = detected.get(pid)
        goal = goals.get(pid)
        result = PlatformResult(pid, obj, goal, None, None, [], pwarn)
        platforms[pid] = result
        if obj is None:
            pwarn.append("platform_lost")
            continue
        if goal is None:
            pwarn.append("no_goal")
            continue
        source = obj.centroid
        if any(
            point_bbox_distance(source, o.bbox_f) < clearance
            for o in planning_obstacles
        ):
            pwarn.append("start_clearance")
        pair = rg.build_platform_pair(
            pid, source, goal, corner_nodes, planning_obstacles, clearance
        )
        graph = rg.assemble_platform_matrix(base, pair)
        other_boxes = [
            detected[other].bbox_f  # type: ignore[union-attr]
            for other in config.platform_ids()
            if other != pid and detected.get(other) is not None
        ]
        graph = rg.occlude_boxes(graph, other_boxes, edge_clear)
        result.graph = graph
        route = dijkstra(graph)
        if route is None:
            pwarn.append("no_route")
            continue
        result.route = route
        waypoints = [graph.nodes[i - 1].pos for i in route.path]
        result.motion = route_to_motion(
            waypoints, mm, config.initial_heading_deg.get(pid, 0.0)
        )
    t4 = time.perf_counter()
    timings["plan_ms"] = (t4 - t3) * 1000.0
    timings["total_ms"] = (t4 - t0) * 1000.0
    timings["dispatch_ms"] = 0.0

    return SceneState(
        frame_seq=seq,
        width=frame.width,
        height=frame.height,
        mm_per_px=mm,
        objects=sorted(objects, key=lambda o: (o.cls.key(), o.bbox)),
        planning_obstacles=planning_obstacles,
        active_obstacles=active,
        platforms=platforms,
        warnings=warnings,
        timings_ms=timings,
    )


Dispatcher = Callable[[str, PlcEndpoint, list[MotionVector]], None]


class Controller:
    """Owns the live config and the latest state; serializes config swaps.

    Config objects are immutable; a swap replaces the reference under a
    lock and takes effect at the next frame, never mid-frame. Subscribers
    get every published state through per-subscriber unbounded queues.
    """

    def __init__(self, config: PipelineConfig, dispatcher: Dispatcher | None = None):
        self._lock = threading.Lock()
        self._config = config
        self._dispatcher = dispatcher
        self._state: SceneState | None = None
        self._frame: Frame | None = None
        self._seq = 0
        self._subs: list = []

    @property
    def config(self) -> PipelineConfig:
        with self._lock:
            return self._config

    def latest(self) -> SceneState | None:
        with self._lock:
            return self._state

    def latest_frame(self) -> Frame | None:
        with self._lock:
            return self._frame

    def set_goal(self, platform_id: str, x: float, y: float) -> None:
        with self._lock:
            if platform_id not in self._config.platform_ids():
                raise KeyError(f"unknown platform {platform_id!r}")
            state = self._state
            if state is not None and not (0 <= x < state.width and 0 <= y < state.height):
                raise ValueError(f"goal ({x}, {y}) outside frame")
            if x < 0 or y < 0:
                raise ValueError("goal coordinates must be non-negative")
            goals = dict(self._config.goals)
            goals[platform_id] = (float(x), float(y))
            self._config = replace(self._config, goals=goals)

    def set_threshold(
        self,
        role: Role,
        lo: tuple[int, int, int],
        hi: tuple[int, int, int],
        platform_id: str | None = None,
    ) -> None:
        with self._lock:
            classes = list(self._config.classes)
            for i, cls in enumerate(classes):
                if cls.role is role and cls.platform_id == platform_id:
                    classes[i] = ColorClass(role, lo, hi, platform_id)
                    self._config = replace(self._config, classes=tuple(classes))
                    return
            raise KeyError(f"no color class for role={role.value} platform={platform_id!r}")

    def subscribe(self):
        import queue as _queue

        q: "_queue.Queue" = _queue.Queue()
        with self._lock:
            self._subs.append(q)
        return q

    def unsubscribe(self, q) -> None:
        with self._lock:
            if q in self._subs:
                self._subs.remove(q)

    def process(self, frame: Frame) -> SceneState:
        with self._lock:
            config = self._config
            self._seq += 1
            seq = self._seq
        state = process_frame(frame, config, seq)
        self._dispatch(state, config)
        with self._lock:
            self._state = state
            self._frame = frame
            subs = list(self._subs)
        for q in subs:
            q.put(state)
        return state

    def _dispatch(self, state: SceneState, config: PipelineConfig) -> None:
        if self._dispatcher is None or not config.plc:
            return
        t0 = time.perf_counter()
        for pid, result in state.platforms.items():
            endpoint = config.plc.get(pid)
            if endpoint is None or result.route is None or not result.motion:
                continue
            try:
                self._dispatcher(pid, endpoint, result.motion)
            except Exception as exc:  # noqa: BLE001 - next frame retries
                result.warnings.append(f"dispatch_failed:{exc}")
        state.timings_ms["dispatch_ms"] = (time.perf_counter() - t0) * 1000.0
