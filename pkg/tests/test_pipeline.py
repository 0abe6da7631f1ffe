from __future__ import annotations

import json
import math
import socket

import numpy as np
import pytest

from warehouse_router.dispatch import (
    MockPlcServer,
    decode_motion_payload,
    encode_motion_payload,
)
from warehouse_router.frames import Frame
from warehouse_router.geometry import distance, segment_bbox_distance
from warehouse_router.pipeline import (
    ConfigurationError,
    Controller,
    PipelineConfig,
    PlcEndpoint,
    config_from_json_dict,
    default_config,
    load_config,
    process_frame,
)
from warehouse_router.scene_vision import ColorClass, Role
from warehouse_router.synthetic import gen_scene

from _support import certify, multi_platform_config


# ---------------------------------------------------------------- config


def test_default_config_is_valid_and_introspectable():
    cfg = default_config()
    assert cfg.platform_ids() == ["p1"]
    assert cfg.min_area_px == 171
    assert cfg.node_clearance_px == pytest.approx(math.hypot(40, 40) / 2 + 5)
    assert cfg.clearance_px == pytest.approx(cfg.node_clearance_px / math.sqrt(2))
    assert cfg.min_corridor_px == 50.0


def test_config_json_round_trip():
    cfg = PipelineConfig(
        classes=default_config().classes,
        mm_per_px=3.5,
        gap_px=7,
        min_area_cm2=12.0,
        platform_w_px=38.0,
        platform_h_px=42.0,
        safety_margin_px=6.0,
        goals={"p1": (500.0, 200.0)},
        initial_heading_deg={"p1": 90.0},
        plc={"p1": PlcEndpoint("10.0.0.9", 102, 3, 16)},
    )
    back = config_from_json_dict(cfg.to_json_dict())
    assert back == cfg


def test_config_json_derived_block_matches_properties():
    cfg = default_config()
    derived = cfg.to_json_dict()["derived"]
    assert derived["min_area_px"] == cfg.min_area_px
    assert derived["node_clearance_px"] == cfg.node_clearance_px
    assert derived["clearance_px"] == cfg.clearance_px
    assert derived["min_corridor_px"] == cfg.min_corridor_px


@pytest.mark.parametrize(
    "kwargs",
    [
        {"mm_per_px": 0.0},
        {"mm_per_px": -1.0},
        {"platform_w_px": 0.0},
        {"platform_h_px": -3.0},
        {"min_area_cm2": 0.0},
        {"gap_px": -1},
        {"safety_margin_px": -0.5},
        {"goals": {"p9": (10.0, 10.0)}},
        {"plc": {"nope": PlcEndpoint("h", 1, 1)}},
        {"initial_heading_deg": {"ghost": 0.0}},
    ],
)
def test_config_rejects_invalid_values(kwargs):
    with pytest.raises(ConfigurationError):
        PipelineConfig(classes=default_config().classes, **kwargs)


def test_load_config_from_file(tmp_path):
    cfg = default_config()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_json_dict()), encoding="utf-8")
    assert load_config(str(path)) == cfg


# ---------------------------------------------------------- process_frame


def _paint(img, box, color):
    x1, y1, x2, y2 = box
    img[y1 : y2 + 1, x1 : x2 + 1] = color


def test_empty_scene_routes_straight_to_goal():
    frame, cfg = gen_scene(n_obstacles=0, seed=1)
    state = process_frame(frame, cfg, seq=7)
    assert state.frame_seq == 7
    res = state.platforms["p1"]
    assert res.route is not None
    assert res.route.hop_count == 1
    assert res.route.path == (1, 2)
    start = res.graph.nodes[0].pos
    goal = res.graph.nodes[-1].pos
    assert res.route.total_cost == pytest.approx(distance(start, goal))
    assert res.motion
    certify(res.route, res.graph)


def test_walled_off_goal_yields_no_route_and_no_motion():
    cfg = default_config()
    img = np.full((480, 640, 3), 255, dtype=np.uint8)
    _paint(img, (40, 220, 79, 259), (60, 200, 60))  # platform
    _paint(img, (570, 220, 609, 259), (220, 40, 40))  # goal zone
    # full-height wall: every detour corner lands outside the frame
    _paint(img, (300, 0, 339, 479), (30, 30, 30))
    state = process_frame(Frame.from_array(img, cfg.mm_per_px), cfg)
    res = state.platforms["p1"]
    assert res.detected is not None and res.goal is not None
    assert res.route is None
    assert res.motion == []
    assert "no_route" in res.warnings
    assert res.to_json_dict()["route"] == {"found": False}


@pytest.mark.parametrize("n,size", [(3, (640, 480)), (6, (640, 480)), (18, (1280, 960))])
def test_obstacle_scenes_produce_certified_clear_routes(n, size):
    frame, cfg = gen_scene(width=size[0], height=size[1], n_obstacles=n, seed=n)
    state = process_frame(frame, cfg)
    res = state.platforms["p1"]
    assert res.route is not None, res.warnings
    certify(res.route, res.graph)
    waypoints = [res.graph.nodes[i - 1].pos for i in res.route.path]
    for a, b in zip(waypoints, waypoints[1:]):
        for obs in state.planning_obstacles:
            assert segment_bbox_distance(a, b, obs.bbox_f) >= cfg.clearance_px - 1e-6


def test_process_frame_is_deterministic_modulo_timings():
    frame, cfg = gen_scene(n_obstacles=5, seed=42)
    a = process_frame(frame, cfg, seq=3).to_json(include_timings=False)
    b = process_frame(frame, cfg, seq=3).to_json(include_timings=False)
    assert a == b


def test_other_platform_blocks_the_direct_corridor():
    cfg = multi_platform_config(2)
    img = np.full((480, 640, 3), 255, dtype=np.uint8)
    _paint(img, (40, 220, 79, 259), (40, 200, 40))  # p1 green
    _paint(img, (300, 220, 339, 259), (200, 200, 40))  # p2 yellow, dead ahead
    _paint(img, (570, 220, 609, 259), (220, 40, 40))  # shared goal
    state = process_frame(Frame.from_array(img, cfg.mm_per_px), cfg)
    p1, p2 = state.platforms["p1"], state.platforms["p2"]
    # no obstacle objects at all, so the only way through is the straight
    # line, and the other platform's body occludes it for p1 only
    assert state.planning_obstacles == []
    assert p1.route is None and "no_route" in p1.warnings
    assert math.isinf(p1.graph.cost[0][1])
    assert p2.route is not None and p2.route.hop_count == 1


def test_start_clearance_warning_when_obstacle_hugs_the_start():
    cfg = default_config()
    img = np.full((480, 640, 3), 255, dtype=np.uint8)
    _paint(img, (40, 220, 79, 259), (60, 200, 60))
    _paint(img, (570, 220, 609, 259), (220, 40, 40))
    _paint(img, (45, 265, 95, 305), (30, 30, 30))  # 25.5 px below start centroid
    state = process_frame(Frame.from_array(img, cfg.mm_per_px), cfg)
    res = state.platforms["p1"]
    assert "start_clearance" in res.warnings
    assert res.route is not None  # still routable along the top


def test_missing_goal_zone_reports_no_goal():
    frame, cfg = gen_scene(n_obstacles=2, seed=5, with_goal_zone=False)
    state = process_frame(frame, cfg)
    res = state.platforms["p1"]
    assert res.goal is None and res.route is None
    assert "no_goal" in res.warnings


def test_missing_platform_reports_platform_lost():
    cfg = default_config()
    img = np.full((480, 640, 3), 255, dtype=np.uint8)
    _paint(img, (570, 220, 609, 259), (220, 40, 40))
    state = process_frame(Frame.from_array(img, cfg.mm_per_px), cfg)
    assert "platform_lost" in state.platforms["p1"].warnings


def test_out_of_bounds_configured_goal_is_dropped_with_warning():
    cfg = PipelineConfig(classes=default_config().classes, goals={"p1": (9999.0, 10.0)})
    img = np.full((480, 640, 3), 255, dtype=np.uint8)
    _paint(img, (40, 220, 79, 259), (60, 200, 60))
    state = process_frame(Frame.from_array(img, cfg.mm_per_px), cfg)
    assert "goal_out_of_bounds:p1" in state.warnings
    assert "no_goal" in state.platforms["p1"].warnings


def test_stage_timings_present_and_nonnegative():
    frame, cfg = gen_scene(n_obstacles=4, seed=9)
    t = process_frame(frame, cfg).timings_ms
    for key in ("classify_ms", "segment_ms", "merge_ms", "plan_ms", "total_ms"):
        assert t[key] >= 0.0
    assert t["total_ms"] >= max(t["classify_ms"], t["segment_ms"], t["plan_ms"])
    assert t["dispatch_ms"] == 0.0  # bare call never dispatches


# -------------------------------------------------------------- controller


def test_controller_sequences_frames_and_keeps_latest():
    frame, cfg = gen_scene(n_obstacles=0, seed=2)
    ctl = Controller(cfg)
    s1 = ctl.process(frame)
    s2 = ctl.process(frame)
    assert (s1.frame_seq, s2.frame_seq) == (1, 2)
    assert ctl.latest() is s2
    assert ctl.latest_frame() is frame


def test_controller_set_goal_validates_and_takes_effect():
    frame, cfg = gen_scene(n_obstacles=0, seed=3)
    ctl = Controller(cfg)
    with pytest.raises(KeyError):
        ctl.set_goal("p9", 10, 10)
    with pytest.raises(ValueError):
        ctl.set_goal("p1", -4, 10)
    ctl.process(frame)
    with pytest.raises(ValueError):
        ctl.set_goal("p1", 10_000, 10)
    ctl.set_goal("p1", 500.0, 100.0)
    state = ctl.process(frame)
    assert state.platforms["p1"].goal == (500.0, 100.0)
    assert ctl.config.goals["p1"] == (500.0, 100.0)


def test_controller_set_threshold_swaps_one_class():
    ctl = Controller(default_config())
    ctl.set_threshold(Role.PLATFORM, (10, 140, 10), (110, 250, 110), "p1")
    swapped = [c for c in ctl.config.classes if c.platform_id == "p1"]
    assert swapped == [ColorClass(Role.PLATFORM, (10, 140, 10), (110, 250, 110), "p1")]
    with pytest.raises(KeyError):
        ctl.set_threshold(Role.PLATFORM, (0, 0, 0), (1, 1, 1), "p2")


def test_controller_subscribers_get_every_state():
    frame, cfg = gen_scene(n_obstacles=0, seed=4)
    ctl = Controller(cfg)
    q = ctl.subscribe()
    s1 = ctl.process(frame)
    assert q.get(timeout=1) is s1
    ctl.unsubscribe(q)
    ctl.process(frame)
    assert q.empty()


def _dispatcher(pid, endpoint, motion):
    from warehouse_router.dispatch import plc_write

    plc_write((endpoint.host, endpoint.port), endpoint.db_number, endpoint.start_offset, motion)


def test_controller_dispatches_motion_to_plc_block():
    server = MockPlcServer("127.0.0.1", 0).start()
    try:
        frame, base = gen_scene(n_obstacles=0, seed=6)
        cfg = PipelineConfig(
            classes=base.classes,
            plc={"p1": PlcEndpoint(server.host, server.port, 1, 0)},
        )
        ctl = Controller(cfg, dispatcher=_dispatcher)
        state = ctl.process(frame)
        motion = state.platforms["p1"].motion
        assert motion
        payload = encode_motion_payload(motion)
        assert server.snapshot(1)[: len(payload)] == payload
        # wire units are tenth-degrees and whole millimetres
        decoded = decode_motion_payload(server.snapshot(1)[: len(payload)])
        assert len(decoded) == len(motion)
        for got, want in zip(decoded, motion):
            assert got.turn_deg == pytest.approx(want.turn_deg, abs=0.05)
            assert got.dist_mm == pytest.approx(want.dist_mm, abs=0.5)
        assert state.timings_ms["dispatch_ms"] > 0.0
    finally:
        server.stop()


def test_controller_dispatch_failure_becomes_warning():
    # grab a port nobody is listening on
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    dead_port = probe.getsockname()[1]
    probe.close()
    frame, base = gen_scene(n_obstacles=0, seed=6)
    cfg = PipelineConfig(
        classes=base.classes,
        plc={"p1": PlcEndpoint("127.0.0.1", dead_port, 1, 0)},
    )
    ctl = Controller(cfg, dispatcher=_dispatcher)
    state = ctl.process(frame)
    assert any(w.startswith("dispatch_failed:") for w in state.platforms["p1"].warnings)
    # the pipeline itself keeps running
    assert ctl.process(frame).frame_seq == 2


def test_controller_without_dispatcher_never_touches_plc():
    frame, base = gen_scene(n_obstacles=0, seed=6)
    cfg = PipelineConfig(
        classes=base.classes, plc={"p1": PlcEndpoint("127.0.0.1", 1, 1, 0)}
    )
    state = Controller(cfg, dispatcher=None).process(frame)
    assert state.timings_ms["dispatch_ms"] == 0.0
    assert not any(w.startswith("dispatch_failed") for w in state.platforms["p1"].warnings)
