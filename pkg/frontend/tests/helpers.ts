import type {
  ObjectRecord,
  PlatformRecord,
  Point,
  SceneState,
} from "../src/types.js";

export function obstacle(bbox: [number, number, number, number]): ObjectRecord {
  const [x1, y1, x2, y2] = bbox;
  return {
    class: "obstacle",
    pixel_count: (x2 - x1 + 1) * (y2 - y1 + 1),
    centroid: [(x1 + x2) / 2, (y1 + y2) / 2],
    bbox,
    area_mm2: 1,
  };
}

export function platformRec(
  pid: string,
  overrides: Partial<PlatformRecord> = {},
): PlatformRecord {
  return {
    platform_id: pid,
    detected: null,
    goal: null,
    warnings: [],
    route: { found: false },
    motion: [],
    ...overrides,
  };
}

export function sceneState(
  seq: number,
  overrides: Partial<SceneState> = {},
): SceneState {
  return {
    frame_seq: seq,
    frame: { width: 640, height: 480, mm_per_px: 2.96875 },
    objects: [],
    planning_obstacles: [],
    active_obstacles: [],
    platforms: { p1: platformRec("p1") },
    warnings: [],
    ...overrides,
  };
}

export function routedPlatform(pid: string, waypoints: Point[]): PlatformRecord {
  let cost = 0;
  for (let i = 1; i < waypoints.length; i++) {
    const [ax, ay] = waypoints[i - 1] as Point;
    const [bx, by] = waypoints[i] as Point;
    cost += Math.hypot(bx - ax, by - ay);
  }
  return platformRec(pid, {
    goal: waypoints[waypoints.length - 1],
    route: {
      found: true,
      path: waypoints.map((_, i) => i + 1),
      cost_px: cost,
      hops: waypoints.length - 1,
      waypoints_px: waypoints,
    },
  });
}
