import { describe, expect, it } from "vitest";

import { RingBuffer } from "../src/ring.js";

describe("RingBuffer", () => {
  it("stores items in order", () => {
    const b = new RingBuffer<number>(5);
    [1, 2, 3].forEach((v) => b.push(v));
    expect(b.toArray()).toEqual([1, 2, 3]);
    expect(b.length).toBe(3);
    expect(b.at(0)).toBe(1);
    expect(b.last()).toBe(3);
  });

  it("drops the oldest items past capacity", () => {
    const b = new RingBuffer<number>(3);
    for (let i = 0; i < 10; i++) b.push(i);
    expect(b.toArray()).toEqual([7, 8, 9]);
    expect(b.length).toBe(3);
  });

  it("stays bounded over long streams", () => {
    const b = new RingBuffer<number>(100);
    for (let i = 0; i < 100_000; i++) b.push(i);
    expect(b.length).toBe(100);
    expect(b.at(0)).toBe(99_900);
  });

  it("clears", () => {
    const b = new RingBuffer<number>(2);
    b.push(1);
    b.clear();
    expect(b.length).toBe(0);
    expect(b.last()).toBeUndefined();
  });

  it("rejects non-positive capacity", () => {
    expect(() => new RingBuffer(0)).toThrow(RangeError);
  });
});
