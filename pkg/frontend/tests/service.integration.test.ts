/**
 * Protocol conformance against the live python service: a scripted
 * headless client replays a recorded stroke over the real websocket.
 */

import { type ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { replayStroke, type SocketFactory } from "../src/client.js";
import type { Outbound, StateMessage } from "../src/protocol.js";
import { CommandLogContext, renderFrame } from "../src/render.js";
import { CanvasSession } from "../src/session.js";

const PORT = 8741;
const WS_URL = `ws://127.0.0.1:${PORT}/ws`;
const WARMUP = 10; // service defaults
const RAMP_TICKS = 10;

const factory: SocketFactory = (url) => new WebSocket(url) as never;

let server: ChildProcess;

async function waitForServer(timeoutMs = 20_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      await new Promise<void>((resolve, reject) => {
        const probe = new WebSocket(WS_URL);
        probe.on("open", () => {
          probe.close();
          resolve();
        });
        probe.on("error", reject);
      });
      return;
    } catch {
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((r) => setTimeout(r, 250));
    }
  }
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "jerktrack.cli", "serve", "--addr", `127.0.0.1:${PORT}`], {
    cwd: new URL("../..", import.meta.url).pathname,
    stdio: "ignore",
  });
  await waitForServer();
}, 30_000);

afterAll(() => {
  server.kill();
});

/** Recorded stroke: a circle drawn at the fixed sample rate. */
function recordedStroke(n: number): Outbound[] {
  const out: Outbound[] = [];
  for (let t = 0; t < n; t++) {
    const a = (2 * Math.PI * t) / 100;
    out.push({
      type: "sample",
      t,
      x: 0.4 + 0.05 * Math.cos(a),
      y: 0.4 + 0.05 * Math.sin(a),
      pen: true,
    });
  }
  return out;
}

function states(replies: Awaited<ReturnType<typeof replayStroke>>["replies"]): StateMessage[] {
  return replies.filter((r): r is StateMessage => r.type === "state");
}

describe("live service conformance", () => {
  it("returns exactly one state message per sample, in order", async () => {
    const stroke = recordedStroke(40);
    const result = await replayStroke(WS_URL, stroke, factory);
    expect(result.malformed).toEqual([]);
    const st = states(result.replies);
    expect(st).toHaveLength(stroke.length);
    expect(st.map((s) => s.t)).toEqual(stroke.map((m) => (m as { t: number }).t));
  }, 20_000);

  it("starts alpha at 0 and ramps it to 1 after warmup", async () => {
    const result = await replayStroke(WS_URL, recordedStroke(40), factory);
    const alphas = states(result.replies).map((s) => s.alpha);
    for (let i = 0; i < WARMUP - 1; i++) expect(alphas[i]).toBe(0);
    expect(alphas[WARMUP - 1]).toBeGreaterThan(0);
    for (let i = WARMUP + RAMP_TICKS - 2; i < alphas.length; i++) {
      expect(alphas[i]).toBe(1);
    }
    for (let i = 1; i < alphas.length; i++) {
      expect(alphas[i]!).toBeGreaterThanOrEqual(alphas[i - 1]!);
    }
    // predictions appear once alpha is nonzero, N=10 points each
    const st = states(result.replies);
    expect(st[0]!.pred).toHaveLength(0);
    expect(st.at(-1)!.pred).toHaveLength(10);
  }, 20_000);

  it("renders a deterministic trail from the replayed message log", async () => {
    const stroke = recordedStroke(40);
    const frames: string[] = [];
    for (let run = 0; run < 2; run++) {
      const result = await replayStroke(WS_URL, stroke, factory);
      const session = new CanvasSession();
      for (const msg of stroke) {
        if (msg.type === "sample") session.recordSample(msg);
      }
      for (const reply of result.replies) session.applyInbound(reply);
      const ctx = new CommandLogContext();
      renderFrame(session, ctx, { width: 400, height: 400 });
      frames.push(ctx.snapshot());
    }
    // Fresh sessions replaying the same stroke produce bit-identical
    // robot state, so the final frames match command for command.
    expect(frames[0]).toBe(frames[1]);
  }, 30_000);

  it("rejects an out-of-order sample with an error and keeps going", async () => {
    const stroke = recordedStroke(5);
    const bad: Outbound = { type: "sample", t: 1, x: 0.4, y: 0.4, pen: true };
    const result = await replayStroke(WS_URL, [...stroke, bad], factory);
    const last = result.replies.at(-1)!;
    expect(last.type).toBe("error");
    expect(states(result.replies)).toHaveLength(5);
  }, 20_000);

  it("acknowledges reset and restarts the session", async () => {
    const messages: Outbound[] = [
      ...recordedStroke(12),
      { type: "reset" },
      { type: "sample", t: 0, x: 0.1, y: 0.9, pen: true },
    ];
    const result = await replayStroke(WS_URL, messages, factory);
    expect(result.replies[12]).toEqual({ type: "ack" });
    const after = result.replies[13]!;
    expect(after.type).toBe("state");
    expect((after as StateMessage).alpha).toBe(0);
  }, 20_000);
});
