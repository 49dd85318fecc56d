import type { CanvasSession, Point } from "./session.js";

/**
 * The subset of CanvasRenderingContext2D the renderer uses. Tests run
 * headless against a command-log implementation of the same interface:
 * since every frame is a pure function of the session state, equal command
 * logs imply pixel-identical frames.
 */
export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  globalAlpha: number;
  font: string;
}

export interface RenderOptions {
  width: number;
  height: number;
  /** World units (service coordinates) per canvas, drawn edge to edge. */
  worldExtent?: number;
}

export const STYLE = {
  background: "#fafafa",
  human: "#1f4e9c",
  robot: "#c0392b",
  ribbon: "#2e8b57",
  gauge: "#444444",
  font: "12px sans-serif",
} as const;

export function gaugeLabel(alpha: number): string {
  if (alpha <= 0) return "feedback";
  if (alpha >= 1) return "feedforward";
  return `blend ${Math.round(alpha * 100)}%`;
}

function drawPolyline(ctx: Draw2D, pts: Point[], toPx: (p: Point) => Point): void {
  if (pts.length === 0) return;
  ctx.beginPath();
  const first = pts[0]!;
  const [x0, y0] = toPx(first);
  ctx.moveTo(x0, y0);
  for (let i = 1; i < pts.length; i++) {
    const [x, y] = toPx(pts[i]!);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
}

/**
 * Draw one frame: human trail, robot trail, prediction ribbon (faded
 * points, hidden when empty) and the alpha gauge. Deterministic in the
 * session state — replaying a message log reproduces the frame exactly.
 */
export function renderFrame(session: CanvasSession, ctx: Draw2D, opts: RenderOptions): void {
  const { width, height } = opts;
  const extent = opts.worldExtent ?? 1.0;
  const scale = Math.min(width, height) / extent;
  const toPx = ([x, y]: Point): Point => [x * scale, height - y * scale];

  ctx.globalAlpha = 1;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = STYLE.background;
  ctx.fillRect(0, 0, width, height);

  ctx.lineWidth = 2;
  ctx.strokeStyle = STYLE.human;
  drawPolyline(ctx, session.humanTrail.toArray(), toPx);

  ctx.strokeStyle = STYLE.robot;
  drawPolyline(ctx, session.robotTrail.toArray(), toPx);

  const ribbon = session.predictionRibbon;
  if (ribbon.length > 0) {
    ctx.fillStyle = STYLE.ribbon;
    ribbon.forEach((p, i) => {
      // Later (less certain) predictions fade out.
      ctx.globalAlpha = 1 - i / ribbon.length;
      const [x, y] = toPx(p);
      ctx.beginPath();
      ctx.arc(x, y, 3, 0, 2 * Math.PI);
      ctx.fill();
    });
    ctx.globalAlpha = 1;
  }

  // Alpha gauge: horizontal bar in the top-left corner plus a label.
  const barW = 120;
  const barH = 8;
  ctx.fillStyle = "#dddddd";
  ctx.fillRect(10, 10, barW, barH);
  ctx.fillStyle = STYLE.gauge;
  ctx.fillRect(10, 10, barW * Math.min(1, Math.max(0, session.alpha)), barH);
  ctx.font = STYLE.font;
  ctx.fillText(gaugeLabel(session.alpha), 10, 32);
}

type Command = (string | number)[];

/** Draw2D implementation that records every call for replay comparison. */
export class CommandLogContext implements Draw2D {
  readonly log: Command[] = [];
  private _strokeStyle = "";
  private _fillStyle = "";
  private _lineWidth = 1;
  private _globalAlpha = 1;
  private _font = "";

  private record(...cmd: Command): void {
    this.log.push(cmd);
  }

  clearRect(x: number, y: number, w: number, h: number): void {
    this.record("clearRect", x, y, w, h);
  }
  fillRect(x: number, y: number, w: number, h: number): void {
    this.record("fillRect", x, y, w, h);
  }
  beginPath(): void {
    this.record("beginPath");
  }
  moveTo(x: number, y: number): void {
    this.record("moveTo", x, y);
  }
  lineTo(x: number, y: number): void {
    this.record("lineTo", x, y);
  }
  arc(x: number, y: number, r: number, a0: number, a1: number): void {
    this.record("arc", x, y, r, a0, a1);
  }
  stroke(): void {
    this.record("stroke");
  }
  fill(): void {
    this.record("fill");
  }
  fillText(text: string, x: number, y: number): void {
    this.record("fillText", text, x, y);
  }

  set strokeStyle(v: string) {
    this._strokeStyle = v;
    this.record("strokeStyle", v);
  }
  get strokeStyle(): string {
    return this._strokeStyle;
  }
  set fillStyle(v: string) {
    this._fillStyle = v;
    this.record("fillStyle", v);
  }
  get fillStyle(): string {
    return this._fillStyle;
  }
  set lineWidth(v: number) {
    this._lineWidth = v;
    this.record("lineWidth", v);
  }
  get lineWidth(): number {
    return this._lineWidth;
  }
  set globalAlpha(v: number) {
    this._globalAlpha = v;
    this.record("globalAlpha", v);
  }
  get globalAlpha(): number {
    return this._globalAlpha;
  }
  set font(v: string) {
    this._font = v;
    this.record("font", v);
  }
  get font(): string {
    return this._font;
  }

  /** Canonical serialization of the frame; equal strings = equal pixels. */
  snapshot(): string {
    return JSON.stringify(this.log);
  }
}
