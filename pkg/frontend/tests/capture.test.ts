import { beforeEach, describe, expect, it } from "vitest";

import { FixedRateSampler } from "../src/capture.js";
import type { Outbound, SampleMessage } from "../src/protocol.js";

let sent: Outbound[];
let sampler: FixedRateSampler;

function samples(): SampleMessage[] {
  return sent.filter((m): m is SampleMessage => m.type === "sample");
}

beforeEach(() => {
  sent = [];
  sampler = new FixedRateSampler((m) => sent.push(m), { rateHz: 100 });
});

describe("FixedRateSampler", () => {
  it("emits at the fixed rate with monotone t", () => {
    sampler.penDown(0.1, 0.2, 0);
    sampler.tick(95); // 10 ms period -> due at 0,10,...,90
    expect(samples()).toHaveLength(10);
    expect(samples().map((s) => s.t)).toEqual([0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
  });

  it("repeats the position while the pointer is still", () => {
    sampler.penDown(0.3, 0.4, 0);
    sampler.tick(45);
    for (const s of samples()) {
      expect(s.x).toBe(0.3);
      expect(s.y).toBe(0.4);
      expect(s.pen).toBe(true);
    }
  });

  it("tracks pointer movement between ticks", () => {
    sampler.penDown(0, 0, 0);
    sampler.tick(5);
    sampler.pointerMove(0.5, 0.5);
    sampler.tick(15);
    const all = samples();
    expect(all[0]).toMatchObject({ x: 0, y: 0 });
    expect(all[1]).toMatchObject({ x: 0.5, y: 0.5 });
  });

  it("keeps sampling with pen=false after pen up", () => {
    sampler.penDown(0.1, 0.1, 0);
    sampler.tick(25);
    sampler.penUp();
    sampler.tick(55);
    const all = samples();
    expect(all.some((s) => s.pen)).toBe(true);
    expect(all.slice(3).every((s) => !s.pen)).toBe(true);
    // still one sample per period, position repeated
    expect(all).toHaveLength(6);
  });

  it("does nothing before the first pen down", () => {
    sampler.tick(1000);
    expect(sent).toHaveLength(0);
  });

  it("reset sends a reset message and restarts t at 0", () => {
    sampler.penDown(0, 0, 0);
    sampler.tick(35);
    sampler.reset();
    expect(sent.at(-1)).toEqual({ type: "reset" });
    sampler.penDown(0.2, 0.2, 100);
    sampler.tick(115);
    const afterReset = samples().slice(4);
    expect(afterReset.map((s) => s.t)).toEqual([0, 1]);
  });

  it("rejects a non-positive rate", () => {
    expect(() => new FixedRateSampler(() => {}, { rateHz: 0 })).toThrow(RangeError);
  });
});
