/**
 * Browser entry point: wires the canvas, the fixed-rate sampler and the
 * websocket together. All control logic lives server-side; this file only
 * moves samples out and frames in.
 */

import { FixedRateSampler } from "./capture.js";
import { parseInbound, serializeOutbound, type Outbound } from "./protocol.js";
import { renderFrame, type Draw2D } from "./render.js";
import { CanvasSession } from "./session.js";

const DEFAULT_URL = "ws://127.0.0.1:8700/ws";
const SAMPLE_RATE_HZ = 100;

export function start(
  canvas: HTMLCanvasElement,
  resetButton: HTMLButtonElement,
  statusEl: HTMLElement,
  url: string = DEFAULT_URL,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas context unavailable");
  const session = new CanvasSession();

  let socket: WebSocket | null = null;
  const sendOut = (msg: Outbound) => {
    if (socket && socket.readyState === WebSocket.OPEN) {
      if (msg.type === "sample") session.recordSample(msg);
      socket.send(serializeOutbound(msg));
    }
  };
  const sampler = new FixedRateSampler(sendOut, { rateHz: SAMPLE_RATE_HZ });

  const connect = () => {
    statusEl.textContent = "connecting…";
    socket = new WebSocket(url);
    socket.addEventListener("open", () => {
      statusEl.textContent = "connected";
    });
    socket.addEventListener("message", (ev) => {
      const msg = parseInbound(String(ev.data));
      if (msg === null) {
        console.warn("malformed frame skipped", ev.data);
        return;
      }
      session.applyInbound(msg);
    });
    socket.addEventListener("close", () => {
      // Visible reconnect state; sampling pauses until reconnected.
      statusEl.textContent = "disconnected — reconnecting…";
      sampler.penUp();
      setTimeout(connect, 1000);
    });
  };
  connect();

  const toWorld = (ev: PointerEvent): [number, number] => {
    const rect = canvas.getBoundingClientRect();
    const extent = Math.min(rect.width, rect.height);
    return [(ev.clientX - rect.left) / extent, 1 - (ev.clientY - rect.top) / extent];
  };
  canvas.addEventListener("pointerdown", (ev) => {
    const [x, y] = toWorld(ev);
    sampler.penDown(x, y, performance.now());
  });
  canvas.addEventListener("pointermove", (ev) => {
    const [x, y] = toWorld(ev);
    sampler.pointerMove(x, y);
  });
  canvas.addEventListener("pointerup", () => sampler.penUp());
  resetButton.addEventListener("click", () => {
    sampler.reset();
    session.clear();
  });

  setInterval(() => sampler.tick(performance.now()), 1000 / SAMPLE_RATE_HZ / 2);

  const frame = () => {
    // CanvasRenderingContext2D satisfies Draw2D at runtime; the cast only
    // narrows the gradient/pattern style union the renderer never uses.
    renderFrame(session, ctx as unknown as Draw2D, {
      width: canvas.width,
      height: canvas.height,
    });
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}
