import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike, type SocketLike } from "../src/api.js";
import { sceneState } from "./helpers.js";

interface Recorded {
  url: string;
  init?: Parameters<FetchLike>[1];
}

function fakeFetch(status = 200, body = "{}") {
  const requests: Recorded[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    requests.push({ url, init });
    return { ok: status < 400, status, text: async () => body };
  };
  return { fetchFn, requests };
}

class FakeSocket implements SocketLike {
  listeners = new Map<string, ((ev: { data: unknown }) => void)[]>();
  closed = false;

  addEventListener(type: string, fn: (ev: { data: unknown }) => void): void {
    const fns = this.listeners.get(type) ?? [];
    fns.push(fn);
    this.listeners.set(type, fns);
  }

  emit(type: string, ev: { data: unknown } = { data: undefined }): void {
    for (const fn of this.listeners.get(type) ?? []) fn(ev);
  }

  close(): void {
    this.closed = true;
  }
}

describe("HTTP client", () => {
  it("posts goals with native pixel coordinates", async () => {
    const { fetchFn, requests } = fakeFetch();
    await new ApiClient("http://svc:8000/", { fetchFn }).postGoal("p1", 480, 120.5);
    expect(requests).toHaveLength(1);
    expect(requests[0]?.url).toBe("http://svc:8000/goals");
    expect(requests[0]?.init?.method).toBe("POST");
    expect(JSON.parse(requests[0]?.init?.body ?? "")).toEqual({
      platform_id: "p1",
      x: 480,
      y: 120.5,
    });
  });

  it("posts thresholds with and without a platform id", async () => {
    const { fetchFn, requests } = fakeFetch();
    const api = new ApiClient("http://svc:8000", { fetchFn });
    await api.postThreshold("obstacle", [0, 0, 0], [90, 90, 90]);
    await api.postThreshold("platform", [0, 140, 0], [110, 250, 110], "p1");
    expect(JSON.parse(requests[0]?.init?.body ?? "")).toEqual({
      role: "obstacle",
      lo: [0, 0, 0],
      hi: [90, 90, 90],
    });
    expect(JSON.parse(requests[1]?.init?.body ?? "")).toEqual({
      role: "platform",
      lo: [0, 140, 0],
      hi: [110, 250, 110],
      platform_id: "p1",
    });
  });

  it("surfaces non-2xx responses as ApiError with the status", async () => {
    const { fetchFn } = fakeFetch(404, '{"error":"unknown platform"}');
    const api = new ApiClient("http://svc:8000", { fetchFn });
    await expect(api.postGoal("p9", 1, 2)).rejects.toThrowError(ApiError);
    await expect(api.postGoal("p9", 1, 2)).rejects.toMatchObject({ status: 404 });
  });

  it("parses scene and config payloads", async () => {
    const state = sceneState(3);
    const { fetchFn, requests } = fakeFetch(200, JSON.stringify(state));
    const api = new ApiClient("http://svc:8000", { fetchFn });
    expect(await api.getScene()).toEqual(state);
    expect(requests[0]?.url).toBe("http://svc:8000/scene");
  });

  it("builds a cache-busted annotated frame url", () => {
    const api = new ApiClient("http://svc:8000", { fetchFn: fakeFetch().fetchFn });
    expect(api.annotatedFrameUrl()).toBe("http://svc:8000/frame/annotated");
    expect(api.annotatedFrameUrl(17)).toBe("http://svc:8000/frame/annotated?seq=17");
  });
});

describe("event stream", () => {
  function wired() {
    const sock = new FakeSocket();
    const api = new ApiClient("http://svc:8000", {
      fetchFn: fakeFetch().fetchFn,
      socketFactory: (url) => {
        expect(url).toBe("ws://svc:8000/events");
        return sock;
      },
    });
    return { api, sock };
  }

  it("delivers parsed states and connection status", () => {
    const { api, sock } = wired();
    const states: number[] = [];
    const status: boolean[] = [];
    api.openEvents({
      onState: (s) => states.push(s.frame_seq),
      onStatus: (up) => status.push(up),
    });
    sock.emit("open");
    sock.emit("message", { data: JSON.stringify(sceneState(1)) });
    sock.emit("message", { data: JSON.stringify(sceneState(2)) });
    sock.emit("close");
    expect(states).toEqual([1, 2]);
    expect(status).toEqual([true, false]);
  });

  it("drops malformed payloads without killing the stream", () => {
    const { api, sock } = wired();
    const states: number[] = [];
    api.openEvents({ onState: (s) => states.push(s.frame_seq) });
    sock.emit("message", { data: "{not json" });
    sock.emit("message", { data: JSON.stringify(sceneState(9)) });
    expect(states).toEqual([9]);
  });

  it("returns the socket so the caller can unsubscribe", () => {
    const { api, sock } = wired();
    const handle = api.openEvents({ onState: () => undefined });
    handle.close();
    expect(sock.closed).toBe(true);
  });
});
