import type { Outbound } from "./protocol.js";

export interface SamplerOptions {
  /** Samples per second; the service runs one control tick per sample. */
  rateHz?: number;
}

/**
 * Fixed-rate pointer sampler.
 *
 * Sampling is clocked, not event-driven: once started, a sample goes out
 * every period with the latest pointer position — repeated verbatim when
 * the pointer is still, flagged pen=false while the pen is lifted — so the
 * server's one-sample-one-tick assumption holds and the model sees
 * stillness. Tick indices are strictly increasing until reset.
 */
export class FixedRateSampler {
  private readonly periodMs: number;
  private x = 0;
  private y = 0;
  private pen = false;
  private running = false;
  private nextT = 0;
  private nextDueMs = 0;

  constructor(
    private readonly send: (msg: Outbound) => void,
    opts: SamplerOptions = {},
  ) {
    const rate = opts.rateHz ?? 100;
    if (!(rate > 0)) throw new RangeError(`rateHz must be positive, got ${rate}`);
    this.periodMs = 1000 / rate;
  }

  penDown(x: number, y: number, nowMs: number): void {
    this.x = x;
    this.y = y;
    this.pen = true;
    if (!this.running) {
      this.running = true;
      this.nextDueMs = nowMs;
    }
  }

  penUp(): void {
    this.pen = false;
  }

  pointerMove(x: number, y: number): void {
    this.x = x;
    this.y = y;
  }

  /** Emit every sample that has come due by nowMs. */
  tick(nowMs: number): void {
    if (!this.running) return;
    while (nowMs >= this.nextDueMs) {
      this.send({ type: "sample", t: this.nextT, x: this.x, y: this.y, pen: this.pen });
      this.nextT += 1;
      this.nextDueMs += this.periodMs;
    }
  }

  /** Send a reset and start a fresh sample stream (t restarts at 0). */
  reset(): void {
    this.send({ type: "reset" });
    this.running = false;
    this.pen = false;
    this.nextT = 0;
  }
}
