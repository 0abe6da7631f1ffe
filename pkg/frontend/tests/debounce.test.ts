import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { RatedPoster } from "../src/debounce.js";

describe("RatedPoster", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("sends the first value immediately", () => {
    const sent: number[] = [];
    const poster = new RatedPoster<number>((v) => sent.push(v));
    poster.push(1);
    expect(sent).toEqual([1]);
  });

  it("coalesces a burst to the latest value after the interval", () => {
    const sent: number[] = [];
    const poster = new RatedPoster<number>((v) => sent.push(v), 200);
    for (let v = 1; v <= 50; v++) poster.push(v);
    expect(sent).toEqual([1]);
    vi.advanceTimersByTime(199);
    expect(sent).toEqual([1]);
    vi.advanceTimersByTime(1);
    expect(sent).toEqual([1, 50]);
  });

  it("never exceeds five posts per second under continuous input", () => {
    const stamps: number[] = [];
    const poster = new RatedPoster<number>(() => stamps.push(Date.now()), 200);
    for (let t = 0; t < 3000; t += 10) {
      poster.push(t);
      vi.advanceTimersByTime(10);
    }
    vi.runAllTimers();
    for (let i = 1; i < stamps.length; i++) {
      expect(stamps[i]! - stamps[i - 1]!).toBeGreaterThanOrEqual(200);
    }
    // 3 s of wiggling: at most 15 sends plus the leading edge
    expect(stamps.length).toBeLessThanOrEqual(16);
    expect(stamps.length).toBeGreaterThanOrEqual(14);
  });

  it("goes quiet once the input stops", () => {
    const sent: number[] = [];
    const poster = new RatedPoster<number>((v) => sent.push(v), 200);
    poster.push(1);
    poster.push(2);
    vi.advanceTimersByTime(5000);
    expect(sent).toEqual([1, 2]);
  });

  it("dispose drops a queued value", () => {
    const sent: number[] = [];
    const poster = new RatedPoster<number>((v) => sent.push(v), 200);
    poster.push(1);
    poster.push(2);
    poster.dispose();
    vi.advanceTimersByTime(1000);
    expect(sent).toEqual([1]);
  });
});
