// Trailing-edge rate limiter for drag streams.
//
// At most maxPerSecond sends go out; a push during the cooldown replaces
// the pending send, and the newest pending send always fires when the
// cooldown ends. A drag therefore never loses its final pose.

export class RateLimiter {
  private readonly intervalMs: number;
  private lastSend = -Infinity;
  private pending: (() => void) | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  sent = 0;

  constructor(maxPerSecond: number) {
    if (maxPerSecond <= 0) throw new Error("maxPerSecond must be > 0");
    this.intervalMs = 1000 / maxPerSecond;
  }

  push(send: () => void): void {
    const now = Date.now();
    if (this.timer === null && now - this.lastSend >= this.intervalMs) {
      this.lastSend = now;
      this.sent++;
      send();
      return;
    }
    this.pending = send;
    if (this.timer === null) {
      const wait = Math.max(0, this.lastSend + this.intervalMs - now);
      this.timer = setTimeout(() => this.fire(), wait);
    }
  }

  private fire(): void {
    this.timer = null;
    const send = this.pending;
    this.pending = null;
    if (send) {
      this.lastSend = Date.now();
      this.sent++;
      send();
    }
  }

  /** Drop anything queued, e.g. when the socket goes away mid-drag. */
  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = null;
  }
}
