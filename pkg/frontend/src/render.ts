import type { GoalMarker } from "./model.js";
import type { Point, Role, SceneState } from "./types.js";

/** What the renderer needs from a 2D context; CanvasRenderingContext2D
 * satisfies it, and tests can record against it. */
export interface Canvas2D {
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  save(): void;
  restore(): void;
  scale(x: number, y: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  setLineDash(segments: number[]): void;
  drawImage?(image: unknown, x: number, y: number): void;
}

export const CLASS_COLORS: Record<Role, string> = {
  platform: "#2ecc40",
  goal: "#ff4136",
  obstacle: "#5b5b5b",
  auxiliary: "#0074d9",
};

const ROUTE_COLORS = ["#ff851b", "#b10dc9", "#39cccc", "#ffdc00"];
const NODE_COLOR = "#7fdbff";
const PENDING_GOAL_COLOR = "#ff4136";

export interface RenderOptions {
  /** Decoded annotated frame, drawn under the overlays when present. */
  image?: unknown;
  /** Display scale; overlay coordinates stay in native frame pixels. */
  scale?: number;
  goalMarkers?: GoalMarker[];
  selected?: string | null;
}

function polyline(ctx: Canvas2D, points: Point[]): void {
  ctx.beginPath();
  points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
  ctx.stroke();
}

function dot(ctx: Canvas2D, [x, y]: Point, r: number, color: string): void {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(x, y, r, 0, Math.PI * 2);
  ctx.fill();
}

/** Draw one scene: frame image, class-colored bboxes, feasible nodes,
 * per-platform route polylines, and goal markers. Everything comes from
 * the single `state` argument, so overlays can never outlive it. */
export function renderScene(
  ctx: Canvas2D,
  state: SceneState,
  opts: RenderOptions = {},
): void {
  const scale = opts.scale ?? 1;
  ctx.save();
  ctx.scale(scale, scale);
  ctx.clearRect(0, 0, state.frame.width, state.frame.height);
  if (opts.image !== undefined && ctx.drawImage) {
    ctx.drawImage(opts.image, 0, 0);
  }

  ctx.setLineDash([]);
  ctx.lineWidth = 1;
  for (const obj of state.objects) {
    const [x1, y1, x2, y2] = obj.bbox;
    ctx.strokeStyle = CLASS_COLORS[obj.class];
    ctx.strokeRect(x1, y1, x2 - x1 + 1, y2 - y1 + 1);
  }

  // merged planning boxes, dashed so raw detections stay visible
  ctx.setLineDash([4, 3]);
  ctx.strokeStyle = CLASS_COLORS.obstacle;
  for (const obs of state.planning_obstacles) {
    const [x1, y1, x2, y2] = obs.bbox;
    ctx.strokeRect(x1, y1, x2 - x1 + 1, y2 - y1 + 1);
  }
  ctx.setLineDash([]);

  const pids = Object.keys(state.platforms).sort();
  pids.forEach((pid, idx) => {
    const rec = state.platforms[pid];
    if (!rec) return;
    if (rec.graph) {
      for (const node of rec.graph.nodes) {
        if (node.kind === "corner") dot(ctx, node.pos, 2, NODE_COLOR);
      }
    }
    if (rec.route.found && rec.route.waypoints_px) {
      ctx.lineWidth = pid === opts.selected ? 3 : 2;
      ctx.strokeStyle = ROUTE_COLORS[idx % ROUTE_COLORS.length] as string;
      polyline(ctx, rec.route.waypoints_px);
    }
  });

  for (const marker of opts.goalMarkers ?? []) {
    if (marker.pending) {
      ctx.lineWidth = 2;
      ctx.strokeStyle = PENDING_GOAL_COLOR;
      ctx.beginPath();
      ctx.arc(marker.pos[0], marker.pos[1], 6, 0, Math.PI * 2);
      ctx.stroke();
    } else {
      dot(ctx, marker.pos, 4, CLASS_COLORS.goal);
    }
  }
  ctx.restore();
}
