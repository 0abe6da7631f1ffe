// Wire types for the control-service JSON payloads.

export type Point = [number, number];
export type BBox = [number, number, number, number];
export type Rgb = [number, number, number];

export type Role = "platform" | "goal" | "obstacle" | "auxiliary";

export interface ObjectRecord {
  class: Role;
  pixel_count: number;
  centroid: Point;
  bbox: BBox;
  area_mm2: number;
  platform_id?: string;
}

export interface RouteRecord {
  found: boolean;
  path?: number[];
  cost_px?: number;
  hops?: number;
  waypoints_px?: Point[];
}

export interface GraphNodeRecord {
  id: number;
  kind: "source" | "sink" | "corner";
  pos: Point;
  obstacle?: number;
  corner?: number;
  platform_id?: string;
}

export interface GraphRecord {
  nodes: GraphNodeRecord[];
  cost: (number | null)[][];
}

export interface MotionRecord {
  turn_deg: number;
  dist_mm: number;
}

export interface PlatformRecord {
  platform_id: string;
  detected: ObjectRecord | null;
  goal: Point | null;
  warnings: string[];
  route: RouteRecord;
  motion: MotionRecord[];
  total_dist_mm?: number;
  graph?: GraphRecord;
}

export interface SceneState {
  frame_seq: number;
  frame: { width: number; height: number; mm_per_px: number };
  objects: ObjectRecord[];
  planning_obstacles: ObjectRecord[];
  active_obstacles: number[];
  platforms: Record<string, PlatformRecord>;
  warnings: string[];
  timings_ms?: Record<string, number>;
}

export interface ColorClassRecord {
  role: Role;
  lo: Rgb;
  hi: Rgb;
  platform_id?: string;
}

export interface ConfigDoc {
  mm_per_px: number;
  gap_px: number;
  min_area_cm2: number;
  platform_w_px: number;
  platform_h_px: number;
  safety_margin_px: number;
  classes: ColorClassRecord[];
  goals: Record<string, Point>;
  initial_heading_deg: Record<string, number>;
  plc: Record<
    string,
    { host: string; port: number; db_number: number; start_offset: number }
  >;
  derived: {
    min_area_px: number;
    node_clearance_px: number;
    clearance_px: number;
    min_corridor_px: number;
  };
}
