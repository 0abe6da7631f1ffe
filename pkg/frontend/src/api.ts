import type { ConfigDoc, Rgb, Role, SceneState } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{ ok: boolean; status: number; text(): Promise<string> }>;

/** The subset of the WebSocket surface the console needs; `ws` and the
 * browser implementation both satisfy it. */
export interface SocketLike {
  addEventListener(type: "open" | "close" | "error", fn: () => void): void;
  addEventListener(type: "message", fn: (ev: { data: unknown }) => void): void;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface EventHandlers {
  onState(state: SceneState): void;
  onStatus?(connected: boolean): void;
}

function defaultSocketFactory(url: string): SocketLike {
  const ctor = (globalThis as { WebSocket?: new (url: string) => SocketLike })
    .WebSocket;
  if (!ctor) throw new Error("no WebSocket implementation available");
  return new ctor(url);
}

export class ApiClient {
  private base: string;
  private fetchFn: FetchLike;
  private socketFactory: SocketFactory;

  constructor(
    baseUrl: string,
    opts: { fetchFn?: FetchLike; socketFactory?: SocketFactory } = {},
  ) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = opts.fetchFn ?? (fetch as unknown as FetchLike);
    this.socketFactory = opts.socketFactory ?? defaultSocketFactory;
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok) throw new ApiError(res.status, `GET ${path} -> ${res.status}`);
    return JSON.parse(await res.text()) as T;
  }

  private async postJson(path: string, body: unknown): Promise<void> {
    const res = await this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      throw new ApiError(res.status, `POST ${path} -> ${res.status}: ${await res.text()}`);
    }
  }

  getScene(): Promise<SceneState> {
    return this.getJson<SceneState>("/scene");
  }

  getConfig(): Promise<ConfigDoc> {
    return this.getJson<ConfigDoc>("/config");
  }

  postGoal(platformId: string, x: number, y: number): Promise<void> {
    return this.postJson("/goals", { platform_id: platformId, x, y });
  }

  postThreshold(role: Role, lo: Rgb, hi: Rgb, platformId?: string): Promise<void> {
    const body: Record<string, unknown> = { role, lo, hi };
    if (platformId !== undefined) body.platform_id = platformId;
    return this.postJson("/thresholds", body);
  }

  /** Cache-busted so a plain <img> refresh always refetches. */
  annotatedFrameUrl(seq?: number): string {
    const bust = seq !== undefined ? `?seq=${seq}` : "";
    return `${this.base}/frame/annotated${bust}`;
  }

  /** Subscribe to the per-frame state push. Returns the socket; callers
   * close it to unsubscribe. Malformed payloads are dropped. */
  openEvents(handlers: EventHandlers): SocketLike {
    const wsUrl = this.base.replace(/^http/, "ws") + "/events";
    const sock = this.socketFactory(wsUrl);
    sock.addEventListener("open", () => handlers.onStatus?.(true));
    sock.addEventListener("close", () => handlers.onStatus?.(false));
    sock.addEventListener("error", () => handlers.onStatus?.(false));
    sock.addEventListener("message", (ev: { data: unknown }) => {
      try {
        handlers.onState(JSON.parse(String(ev.data)) as SceneState);
      } catch {
        // a truncated frame must not kill the stream
      }
    });
    return sock;
  }
}
