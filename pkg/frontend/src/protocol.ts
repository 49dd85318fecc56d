/**
 * Wire protocol shared with the tracking service: JSON text frames over a
 * websocket. Every accepted sample yields exactly one state reply.
 */

export interface SampleMessage {
  type: "sample";
  /** Strictly increasing tick index within a session. */
  t: number;
  x: number;
  y: number;
  /** False while the pen is lifted; the position is still streamed. */
  pen: boolean;
}

export interface ResetMessage {
  type: "reset";
}

export type Outbound = SampleMessage | ResetMessage;

export interface StateMessage {
  type: "state";
  t: number;
  /** Simulated robot pen position. */
  rx: number;
  ry: number;
  /** Feedforward weight in [0, 1]; 0 = feedback-only. */
  alpha: number;
  /** Predicted positions for the next N steps; empty while alpha is 0. */
  pred: [number, number][];
}

export interface AckMessage {
  type: "ack";
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type Inbound = StateMessage | AckMessage | ErrorMessage;

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/**
 * Parse and validate one inbound frame. Returns null for anything
 * malformed; the caller logs and skips the frame.
 */
export function parseInbound(raw: string): Inbound | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const msg = doc as Record<string, unknown>;
  switch (msg.type) {
    case "ack":
      return { type: "ack" };
    case "error":
      return typeof msg.message === "string"
        ? { type: "error", message: msg.message }
        : null;
    case "state": {
      if (
        !isFiniteNumber(msg.t) ||
        !isFiniteNumber(msg.rx) ||
        !isFiniteNumber(msg.ry) ||
        !isFiniteNumber(msg.alpha) ||
        !Array.isArray(msg.pred)
      ) {
        return null;
      }
      const pred: [number, number][] = [];
      for (const p of msg.pred) {
        if (!Array.isArray(p) || !isFiniteNumber(p[0]) || !isFiniteNumber(p[1])) {
          return null;
        }
        pred.push([p[0], p[1]]);
      }
      return {
        type: "state",
        t: msg.t,
        rx: msg.rx,
        ry: msg.ry,
        alpha: msg.alpha,
        pred,
      };
    }
    default:
      return null;
  }
}

export function serializeOutbound(msg: Outbound): string {
  return JSON.stringify(msg);
}
