import type { ApiClient } from "./api.js";
import type { Point, Rgb, Role, SceneState } from "./types.js";

export type ConnectionStatus = "connecting" | "live" | "closed";

export interface GoalMarker {
  platformId: string;
  pos: Point;
  /** Optimistic (posted, not yet confirmed by a newer frame). */
  pending: boolean;
}

export interface ThresholdEdit {
  role: Role;
  platformId?: string;
  lo: Rgb;
  hi: Rgb;
}

function editKey(role: Role, platformId?: string): string {
  return platformId ? `${role}:${platformId}` : role;
}

/** Client-side scene model.
 *
 * Holds the newest SceneState and everything the operator has asked for
 * that the server has not yet reflected. All rendering reads go through
 * this object, so an overlay can only ever come from the latest frame.
 */
export class ViewModel {
  private state: SceneState | null = null;
  private pendingGoals = new Map<string, Point>();
  private edits = new Map<string, ThresholdEdit>();
  selectedPlatform: string | null = null;
  status: ConnectionStatus = "connecting";

  constructor(private api: ApiClient) {}

  get latest(): SceneState | null {
    return this.state;
  }

  /** Accept a pushed state unless it is stale. Returns whether it was
   * applied. Every applied delta reconciles the optimistic goal markers:
   * from then on the server's own goal is the truth on screen. */
  ingest(state: SceneState): boolean {
    if (this.state !== null && state.frame_seq <= this.state.frame_seq) {
      return false;
    }
    this.state = state;
    this.pendingGoals.clear();
    if (this.selectedPlatform === null) {
      const ids = Object.keys(state.platforms).sort();
      this.selectedPlatform = ids[0] ?? null;
    }
    return true;
  }

  setStatus(connected: boolean): void {
    this.status = connected ? "live" : "closed";
  }

  selectPlatform(platformId: string): void {
    if (this.state && !(platformId in this.state.platforms)) {
      throw new Error(`unknown platform ${platformId}`);
    }
    this.selectedPlatform = platformId;
  }

  /** True when (x, y) lies inside the latest frame. Without a frame there
   * is nothing to aim at, so everything is out of bounds. */
  inBounds(x: number, y: number): boolean {
    if (!this.state) return false;
    const { width, height } = this.state.frame;
    return x >= 0 && x < width && y >= 0 && y < height;
  }

  /** Place the selected platform's goal. Out-of-bounds clicks are dropped
   * here and never reach the server. Resolves true when posted. */
  async clickToGoal(x: number, y: number): Promise<boolean> {
    const pid = this.selectedPlatform;
    if (pid === null || !this.inBounds(x, y)) return false;
    this.pendingGoals.set(pid, [x, y]);
    try {
      await this.api.postGoal(pid, x, y);
      return true;
    } catch (err) {
      this.pendingGoals.delete(pid);
      throw err;
    }
  }

  /** Server goals overlaid with any optimistic ones (optimistic wins for
   * its platform until the next delta lands). */
  goalMarkers(): GoalMarker[] {
    const markers = new Map<string, GoalMarker>();
    if (this.state) {
      for (const [pid, rec] of Object.entries(this.state.platforms)) {
        if (rec.goal) markers.set(pid, { platformId: pid, pos: rec.goal, pending: false });
      }
    }
    for (const [pid, pos] of this.pendingGoals) {
      markers.set(pid, { platformId: pid, pos, pending: true });
    }
    return [...markers.values()].sort((a, b) =>
      a.platformId.localeCompare(b.platformId),
    );
  }

  /** Record a slider edit; the caller pushes it through a RatedPoster. */
  stageThreshold(edit: ThresholdEdit): void {
    this.edits.set(editKey(edit.role, edit.platformId), edit);
  }

  pendingEdits(): ThresholdEdit[] {
    return [...this.edits.values()];
  }

  async postThreshold(edit: ThresholdEdit): Promise<void> {
    await this.api.postThreshold(edit.role, edit.lo, edit.hi, edit.platformId);
    // acked: the edit is now server state, not a pending one
    this.edits.delete(editKey(edit.role, edit.platformId));
  }
}
