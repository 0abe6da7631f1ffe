/** Rate-limited poster for slider-style inputs.
 *
 * The first value in a quiet period goes out immediately; anything arriving
 * inside the minimum interval is coalesced and the latest value is sent
 * once the interval elapses. Worst case send rate is 1 / minIntervalMs.
 */
export class RatedPoster<T> {
  private lastSent = Number.NEGATIVE_INFINITY;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private pending: T | undefined;

  constructor(
    private send: (value: T) => void,
    private minIntervalMs = 200,
  ) {}

  push(value: T): void {
    const now = Date.now();
    if (this.timer === null && now - this.lastSent >= this.minIntervalMs) {
      this.lastSent = now;
      this.send(value);
      return;
    }
    this.pending = value;
    if (this.timer === null) {
      const wait = Math.max(0, this.lastSent + this.minIntervalMs - now);
      this.timer = setTimeout(() => this.fire(), wait);
    }
  }

  private fire(): void {
    this.timer = null;
    this.lastSent = Date.now();
    const value = this.pending as T;
    this.pending = undefined;
    this.send(value);
  }

  /** Drop anything still queued (e.g. on unmount). */
  dispose(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = undefined;
  }
}
