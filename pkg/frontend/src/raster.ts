/** Deterministic software rasterizer for the stroke model.
 *
 * The exported PNG must be a pure function of the stroke list, so strokes
 * are rendered here rather than through a 2D context (whose antialiasing is
 * engine-specific). Round-cap segments, integer pixel grid, no blending.
 * Squared distances only; Math.hypot is not correctly-rounded everywhere.
 */

import type { CanvasState, Stroke } from "./strokes.js";

export function parseHex(color: string): [number, number, number] {
  const m = /^#([0-9a-f]{6})$/i.exec(color);
  if (!m) throw new Error(`expected #rrggbb color, got ${JSON.stringify(color)}`);
  const v = parseInt(m[1]!, 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

export function makeBlank(width: number, height: number): Uint8ClampedArray {
  return new Uint8ClampedArray(width * height * 4).fill(255);
}

function putPixel(buf: Uint8ClampedArray, w: number, x: number, y: number, rgb: [number, number, number]) {
  const i = (y * w + x) * 4;
  buf[i] = rgb[0];
  buf[i + 1] = rgb[1];
  buf[i + 2] = rgb[2];
  buf[i + 3] = 255;
}

function paintSegment(
  buf: Uint8ClampedArray,
  w: number,
  h: number,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
  radius: number,
  rgb: [number, number, number],
) {
  const minX = Math.max(0, Math.floor(Math.min(x0, x1) - radius));
  const maxX = Math.min(w - 1, Math.ceil(Math.max(x0, x1) + radius));
  const minY = Math.max(0, Math.floor(Math.min(y0, y1) - radius));
  const maxY = Math.min(h - 1, Math.ceil(Math.max(y0, y1) + radius));
  const dx = x1 - x0;
  const dy = y1 - y0;
  const len2 = dx * dx + dy * dy;
  const r2 = radius * radius;

  for (let y = minY; y <= maxY; y++) {
    for (let x = minX; x <= maxX; x++) {
      let t = len2 > 0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0;
      t = t < 0 ? 0 : t > 1 ? 1 : t;
      const ex = x - (x0 + t * dx);
      const ey = y - (y0 + t * dy);
      if (ex * ex + ey * ey <= r2) putPixel(buf, w, x, y, rgb);
    }
  }
}

function floodFill(
  buf: Uint8ClampedArray,
  w: number,
  h: number,
  sx: number,
  sy: number,
  rgb: [number, number, number],
) {
  const x0 = Math.floor(sx);
  const y0 = Math.floor(sy);
  if (x0 < 0 || y0 < 0 || x0 >= w || y0 >= h) return;
  const at = (x: number, y: number) => (y * w + x) * 4;
  const seed = at(x0, y0);
  const target: [number, number, number] = [buf[seed]!, buf[seed + 1]!, buf[seed + 2]!];
  if (target[0] === rgb[0] && target[1] === rgb[1] && target[2] === rgb[2]) return;

  const matches = (i: number) =>
    buf[i] === target[0] && buf[i + 1] === target[1] && buf[i + 2] === target[2];

  const stack: number[] = [x0, y0];
  while (stack.length > 0) {
    const y = stack.pop()!;
    const x = stack.pop()!;
    if (!matches(at(x, y))) continue;
    // walk the whole scanline run, then seed the rows above and below
    let left = x;
    while (left > 0 && matches(at(left - 1, y))) left--;
    let right = x;
    while (right < w - 1 && matches(at(right + 1, y))) right++;
    for (let cx = left; cx <= right; cx++) {
      putPixel(buf, w, cx, y, rgb);
      if (y > 0 && matches(at(cx, y - 1))) stack.push(cx, y - 1);
      if (y < h - 1 && matches(at(cx, y + 1))) stack.push(cx, y + 1);
    }
  }
}

export function applyStroke(buf: Uint8ClampedArray, w: number, h: number, stroke: Stroke): void {
  const rgb: [number, number, number] =
    stroke.tool === "eraser" ? [255, 255, 255] : parseHex(stroke.color);
  if (stroke.points.length === 0) return;

  if (stroke.tool === "fill") {
    const p = stroke.points[0]!;
    floodFill(buf, w, h, p.x, p.y, rgb);
    return;
  }

  const radius = Math.max(0.5, stroke.width / 2);
  if (stroke.points.length === 1) {
    const p = stroke.points[0]!;
    paintSegment(buf, w, h, p.x, p.y, p.x, p.y, radius, rgb);
    return;
  }
  for (let i = 1; i < stroke.points.length; i++) {
    const a = stroke.points[i - 1]!;
    const b = stroke.points[i]!;
    paintSegment(buf, w, h, a.x, a.y, b.x, b.y, radius, rgb);
  }
}

/** Render the whole state onto a fresh white canvas buffer (RGBA). */
export function rasterize(state: CanvasState): Uint8ClampedArray {
  const buf = makeBlank(state.width, state.height);
  for (const stroke of state.strokes) applyStroke(buf, state.width, state.height, stroke);
  return buf;
}
