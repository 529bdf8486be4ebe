// Canvas drawing: a top view on the junction plane plus a narrow side
// strip for the gravity axis. Projection math is exported on its own
// so it can be unit tested without a canvas.

import { ConsoleModel } from "./model.js";
import { GeometryInfo, Vec3 } from "./protocol.js";

export interface Segment {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  label: "main" | "A" | "B";
}

export interface Bounds {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

/** Centerline segments of the vessel in world meters, junction plane. */
export function geometrySegments(geometry: GeometryInfo): Segment[] {
  const main: Segment = { x0: 0, y0: 0, x1: geometry.main_length, y1: 0, label: "main" };
  if (geometry.kind === "tube") return [main];
  const half = geometry.branch_angle / 2;
  const jx = geometry.main_length;
  const dx = Math.cos(half) * geometry.branch_length;
  const dy = Math.sin(half) * geometry.branch_length;
  return [
    main,
    { x0: jx, y0: 0, x1: jx + dx, y1: dy, label: "A" },
    { x0: jx, y0: 0, x1: jx + dx, y1: -dy, label: "B" },
  ];
}

export function segmentBounds(segments: Segment[], pad: number): Bounds {
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const s of segments) {
    minX = Math.min(minX, s.x0, s.x1);
    maxX = Math.max(maxX, s.x0, s.x1);
    minY = Math.min(minY, s.y0, s.y1);
    maxY = Math.max(maxY, s.y0, s.y1);
  }
  return { minX: minX - pad, maxX: maxX + pad, minY: minY - pad, maxY: maxY + pad };
}

export interface Transform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit world bounds into a pixel box, preserving aspect, y up. */
export function fitTransform(bounds: Bounds, width: number, height: number): Transform {
  const spanX = bounds.maxX - bounds.minX;
  const spanY = bounds.maxY - bounds.minY;
  const scale = Math.min(width / spanX, height / spanY);
  const offsetX = (width - spanX * scale) / 2 - bounds.minX * scale;
  const offsetY = (height + spanY * scale) / 2 + bounds.minY * scale;
  return { scale, offsetX, offsetY };
}

export function toPixel(tf: Transform, x: number, y: number): [number, number] {
  return [x * tf.scale + tf.offsetX, -y * tf.scale + tf.offsetY];
}

const LUMEN = "#1d2b3a";
const LUMEN_TARGET = "#21445c";
const WALL = "#5c7898";
const TRACE = "#6fc2ff";
const CAPSULE = "#ffb347";
const CAPSULE_GONE = "#7a5a36";

function strokeVessel(
  ctx: CanvasRenderingContext2D,
  tf: Transform,
  s: Segment,
  widthM: number,
  color: string,
): void {
  const [ax, ay] = toPixel(tf, s.x0, s.y0);
  const [bx, by] = toPixel(tf, s.x1, s.y1);
  ctx.strokeStyle = color;
  ctx.lineWidth = Math.max(2, widthM * tf.scale);
  ctx.lineCap = "round";
  ctx.beginPath();
  ctx.moveTo(ax, ay);
  ctx.lineTo(bx, by);
  ctx.stroke();
}

export function drawTopView(
  ctx: CanvasRenderingContext2D,
  model: ConsoleModel,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const geometry = model.hello?.geometry;
  if (!geometry) return;
  const segments = geometrySegments(geometry);
  const tf = fitTransform(segmentBounds(segments, geometry.diameter), width, height);

  for (const s of segments) {
    const target = s.label === model.targetBranch;
    strokeVessel(ctx, tf, s, geometry.diameter, target ? LUMEN_TARGET : LUMEN);
  }
  for (const s of segments) {
    const target = s.label === model.targetBranch;
    ctx.setLineDash(target ? [6, 4] : []);
    strokeVessel(ctx, tf, s, geometry.diameter * 0.04, WALL);
    ctx.setLineDash([]);
  }

  if (model.trace.length > 1) {
    ctx.strokeStyle = TRACE;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    model.trace.forEach((p, i) => {
      const [x, y] = toPixel(tf, p[0], p[1]);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  }

  const state = model.latest;
  if (state && model.hello) {
    drawCapsule(
      ctx,
      toPixel(tf, state.position[0], state.position[1]),
      (model.hello.capsule.diameter / 2) * tf.scale,
      state.dissolved_fraction,
    );
  }
}

function drawCapsule(
  ctx: CanvasRenderingContext2D,
  [x, y]: [number, number],
  radiusPx: number,
  dissolved: number,
): void {
  const r = Math.max(3, radiusPx) * (1 - 0.6 * dissolved);
  ctx.fillStyle = dissolved < 1 ? CAPSULE : CAPSULE_GONE;
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fill();
  if (dissolved > 0 && dissolved < 1) {
    ctx.strokeStyle = CAPSULE_GONE;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(x, y, r + 2, -Math.PI / 2, -Math.PI / 2 + 2 * Math.PI * dissolved);
    ctx.stroke();
  }
}

/** Side strip: x along the vessel, z against gravity. */
export function drawSideStrip(
  ctx: CanvasRenderingContext2D,
  model: ConsoleModel,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const geometry = model.hello?.geometry;
  if (!geometry) return;
  const reach =
    geometry.kind === "tube"
      ? geometry.main_length
      : geometry.main_length + geometry.branch_length * Math.cos(geometry.branch_angle / 2);
  const bounds: Bounds = {
    minX: -geometry.diameter,
    maxX: reach + geometry.diameter,
    minY: -geometry.diameter,
    maxY: geometry.diameter,
  };
  const tf = fitTransform(bounds, width, height);
  const r = geometry.diameter / 2;

  const [x0, yTop] = toPixel(tf, 0, r);
  const [x1, yBot] = toPixel(tf, reach, -r);
  ctx.fillStyle = LUMEN;
  ctx.fillRect(x0, yTop, x1 - x0, yBot - yTop);
  ctx.strokeStyle = WALL;
  ctx.lineWidth = 1;
  ctx.strokeRect(x0, yTop, x1 - x0, yBot - yTop);

  const state = model.latest;
  if (state && model.hello) {
    drawCapsule(
      ctx,
      toPixel(tf, state.position[0], state.position[2]),
      (model.hello.capsule.diameter / 2) * tf.scale,
      state.dissolved_fraction,
    );
  }
}

export function formatVec(v: Vec3, digits: number): string {
  return v.map((c) => c.toFixed(digits)).join(", ");
}
