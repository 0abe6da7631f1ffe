"""Command line front end.

Subcommands: plan a single image, serve the full control service, bench
per-stage throughput, run brute-force oracle cross-checks, and the
reference acquisition client. Exit codes: 0 success, 2 no route found for
a routed platform, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from . import oracles, route_graph as rg, shortest_path as sp
from .frames import decode_p6, encode_p6
from .ingest import file_source, format_fps_table, measure_stage_fps, send_frames
from .overlay import render_annotated
from .pipeline import (
    CONFIG_ENV_VAR,
    PipelineConfig,
    default_config,
    load_config,
    process_frame,
)
from .scene_vision import classify_pixels, segment_objects
from .synthetic import gen_scene

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_ROUTE = 2


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None:
        return default_config()
    return load_config(path)


def _parse_hostport(text: str, default_port: int) -> tuple[str, int]:
    if ":" in text:
        host, port = text.rsplit(":", 1)
        return host, int(port)
    return text, default_port


def _parse_goal(text: str) -> tuple[str, tuple[float, float]]:
    pid, _, coords = text.partition("=")
    x, _, y = coords.partition(",")
    return pid, (float(x), float(y))


def cmd_plan(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.goal:
        goals = dict(config.goals)
        for text in args.goal:
            pid, goal = _parse_goal(text)
            goals[pid] = goal
        from dataclasses import replace

        config = replace(config, goals=goals)
    frame = decode_p6(Path(args.input).read_bytes(), config.mm_per_px)
    state = process_frame(frame, config, seq=1)
    doc = state.to_json_dict(include_timings=not args.no_timings)
    text = json.dumps(doc, indent=2 if args.pretty else None, sort_keys=True)
    if args.route_out:
        Path(args.route_out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.annotated_out:
        Path(args.annotated_out).write_bytes(encode_p6(render_annotated(frame, state)))
    attempted = [
        r for r in state.platforms.values() if r.detected is not None and r.goal is not None
    ]
    if any(r.route is None for r in attempted) or not attempted:
        return EXIT_NO_ROUTE
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import ServiceRuntime, run_service

    config = _load_config(args.config)
    ingest = None if args.no_ingest else _parse_hostport(args.ingest, 5005)
    runtime = ServiceRuntime(
        config,
        ingest=ingest,
        replay=args.input,
        replay_fps=args.fps,
        replay_loop=args.loop,
        dispatch=not args.no_dispatch,
    )
    host, port = _parse_hostport(args.http, 8000)
    run_service(runtime, host, port)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    frame, config = gen_scene(args.width, args.height, args.obstacles, seed=args.seed)
    masks = classify_pixels(frame, config.classes)
    from .scene_vision import min_area_pixels

    floor = min_area_pixels(config.min_area_cm2, frame.mm_per_px)

    def stage_synthesize() -> None:
        gen_scene(args.width, args.height, args.obstacles, seed=args.seed)

    def stage_classify() -> None:
        classify_pixels(frame, config.classes)

    def stage_segment() -> None:
        for cls, mask in masks.items():
            segment_objects(mask, cls, config.gap_px, floor, frame.mm_per_px)

    def stage_plan() -> None:
        process_frame(frame, config)

    stages = [
        ("synthesize", stage_synthesize),
        ("classify", stage_classify),
        ("segment", stage_segment),
        ("end_to_end", stage_plan),
    ]
    end_to_end_fps = []
    for name, fn in stages:
        rows = [measure_stage_fps(fn, args.duration) for _ in range(args.rows)]
        print(format_fps_table(f"stage: {name}", rows))
        print()
        if name == "end_to_end":
            end_to_end_fps = [r["fps"] for r in rows]
    mean_fps = sum(end_to_end_fps) / len(end_to_end_fps)
    floor_fps = args.min_fps
    verdict = "ok" if mean_fps >= floor_fps else "below target"
    print(f"end-to-end mean: {mean_fps:.2f} fps (target >= {floor_fps:.0f} fps): {verdict}")
    return EXIT_OK if mean_fps >= floor_fps else EXIT_ERROR


def _oracle_random_graph(rng: random.Random, m: int, density: float) -> rg.RouteGraph:
    nodes = [rg.Node(1, "source", (0.0, 0.0))]
    for i in range(2, m):
        nodes.append(rg.Node(i, "corner", (float(i), 0.0), obstacle=0, corner=0))
    nodes.append(rg.Node(m, "sink", (float(m), 0.0)))
    cost = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            c = rng.uniform(1.0, 100.0) if rng.random() < density else sp.INFINITY
            cost[i][j] = c
            cost[j][i] = c
    return rg.RouteGraph(nodes, cost)


def cmd_oracle(args: argparse.Namespace) -> int:
    rng = random.Random(args.seed)
    failures = 0

    checked = 0
    for _ in range(args.trials):
        m = rng.randint(3, 7)
        graph = _oracle_random_graph(rng, m, density=0.6)
        got = sp.dijkstra(graph)
        want = oracles.brute_force_route(graph)
        if (got is None) != (want is None) or (got is not None and got != want):
            failures += 1
        elif got is not None:
            flow = sp.route_to_flow(got)
            if not sp.validate_flow(flow, graph).ok:
                failures += 1
            if not oracles.is_simple_path_flow(flow, 1, graph.m):
                failures += 1
        checked += 1
    print(f"route optimality + flow certification: {checked} graphs, {failures} failures")

    adj_checked = adj_failures = 0
    for trial in range(max(1, args.trials // 10)):
        frame, config = gen_scene(640, 480, 4, seed=args.seed + trial)
        state = process_frame(frame, config)
        for result in state.platforms.values():
            if result.graph is None:
                continue
            g = result.graph
            clear = config.clearance_px
            for i in range(g.m):
                for j in range(i + 1, g.m):
                    finite = g.cost[i][j] != sp.INFINITY
                    ok = all(
                        oracles.segment_box_distance_by_edges(
                            g.nodes[i].pos, g.nodes[j].pos, o.bbox_f
                        )
                        >= clear - rg.CLEARANCE_EPS_PX
                        for o in state.planning_obstacles
                    )
                    adj_checked += 1
                    if finite != ok:
                        adj_failures += 1
    print(f"adjacency clearance recheck: {adj_checked} edges, {adj_failures} failures")
    failures += adj_failures

    seg_checked = seg_failures = 0
    import numpy as np

    from .scene_vision import ColorClass, Role as R

    cls = ColorClass(R.OBSTACLE, (0, 0, 0), (10, 10, 10))
    for trial in range(max(1, args.trials // 20)):
        trial_rng = random.Random(args.seed + 1000 + trial)
        mask = np.zeros((48, 48), dtype=bool)
        pts = {
            (trial_rng.randrange(48), trial_rng.randrange(48)) for _ in range(60)
        }
        for x, y in pts:
            mask[y, x] = True
        gap = trial_rng.randint(1, 6)
        objs = segment_objects(mask, cls, gap_px=gap)
        want = oracles.union_find_segmentation(((x, y) for y, x in zip(*np.nonzero(mask))), gap)
        got_counts = sorted(o.pixel_count for o in objs)
        want_counts = sorted(len(g) for g in want)
        seg_checked += 1
        if got_counts != want_counts:
            seg_failures += 1
    print(f"segmentation union-find recheck: {seg_checked} masks, {seg_failures} failures")
    failures += seg_failures

    print("oracle verdict:", "all agree" if failures == 0 else f"{failures} disagreements")
    return EXIT_OK if failures == 0 else EXIT_ERROR


def cmd_acquire(args: argparse.Namespace) -> int:
    server = _parse_hostport(args.server, 5005)
    total = 0
    while True:
        frames = file_source(args.input)
        sent = send_frames(server, frames, fps=args.fps)
        total += sent
        if not args.loop:
            break
    print(f"acknowledged frames: {total}")
    return EXIT_OK if total > 0 else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warehouse-router")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="route one frame from a pixmap file")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--goal", action="append", help="pid=x,y (repeatable)")
    p.add_argument("--route-out")
    p.add_argument("--annotated-out")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--no-timings", action="store_true")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("serve", help="run ingest + pipeline + HTTP/WS API")
    p.add_argument("--config")
    p.add_argument("--http", default="127.0.0.1:8000")
    p.add_argument("--ingest", default="127.0.0.1:5005")
    p.add_argument("--no-ingest", action="store_true")
    p.add_argument("--input", help="replay pixmap directory")
    p.add_argument("--fps", type=float, default=10.0)
    p.add_argument("--loop", action="store_true")
    p.add_argument("--no-dispatch", action="store_true")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("bench", help="per-stage throughput tables")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=480)
    p.add_argument("--obstacles", type=int, default=6)
    p.add_argument("--rows", type=int, default=5)
    p.add_argument("--duration", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-fps", type=float, default=15.0)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("oracle", help="brute-force cross-checks")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("acquire", help="stream pixmap files to an ingest server")
    _add_acquire_args(p)
    p.set_defaults(fn=cmd_acquire)
    return parser


def _add_acquire_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--server", required=True, help="host:port")
    p.add_argument("--input", required=True, help="pixmap file or directory")
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--loop", action="store_true")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except KeyboardInterrupt:
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def acquire_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="warehouse-acquire")
    _add_acquire_args(parser)
    args = parser.parse_args(argv)
    try:
        return cmd_acquire(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
