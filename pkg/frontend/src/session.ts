import type { Inbound, SampleMessage } from "./protocol.js";
import { RingBuffer } from "./ring.js";

export const TRAIL_CAPACITY = 10_000;

export type Point = [number, number];

/**
 * View-side session state: the human trail, the robot trail, the latest
 * prediction ribbon and the blending weight. Pure state — no control
 * logic lives here; the service owns the controller.
 */
export class CanvasSession {
  readonly humanTrail = new RingBuffer<Point>(TRAIL_CAPACITY);
  readonly robotTrail = new RingBuffer<Point>(TRAIL_CAPACITY);
  predictionRibbon: Point[] = [];
  alpha = 0;
  errorCount = 0;
  lastError: string | null = null;

  /** Record an outbound sample; only pen-down points join the trail. */
  recordSample(sample: SampleMessage): void {
    if (sample.pen) {
      this.humanTrail.push([sample.x, sample.y]);
    }
  }

  /** Fold one inbound message into the view state. */
  applyInbound(msg: Inbound): void {
    switch (msg.type) {
      case "state":
        this.robotTrail.push([msg.rx, msg.ry]);
        this.predictionRibbon = msg.pred;
        this.alpha = msg.alpha;
        break;
      case "ack":
        this.clear();
        break;
      case "error":
        this.errorCount += 1;
        this.lastError = msg.message;
        break;
    }
  }

  clear(): void {
    this.humanTrail.clear();
    this.robotTrail.clear();
    this.predictionRibbon = [];
    this.alpha = 0;
  }
}
