import { describe, expect, it } from "vitest";
import { applyStroke, makeBlank, parseHex, rasterize } from "../src/raster";
import type { CanvasState, Stroke } from "../src/strokes";

const W = 32;
const H = 32;

function pixel(buf: Uint8ClampedArray, x: number, y: number): [number, number, number, number] {
  const i = (y * W + x) * 4;
  return [buf[i]!, buf[i + 1]!, buf[i + 2]!, buf[i + 3]!];
}

function state(...strokes: Stroke[]): CanvasState {
  return { width: W, height: H, strokes };
}

describe("parseHex", () => {
  it("decodes #rrggbb", () => {
    expect(parseHex("#ff0000")).toEqual([255, 0, 0]);
    expect(parseHex("#336699")).toEqual([0x33, 0x66, 0x99]);
    expect(parseHex("#ABCDEF")).toEqual([0xab, 0xcd, 0xef]);
  });

  it("rejects anything else", () => {
    for (const bad of ["red", "#fff", "336699", "#33669"]) {
      expect(() => parseHex(bad)).toThrow(/rrggbb/);
    }
  });
});

describe("rasterize", () => {
  it("empty state is an all-white opaque canvas", () => {
    const buf = rasterize(state());
    expect(buf).toHaveLength(W * H * 4);
    expect(buf.every((v) => v === 255)).toBe(true);
  });

  it("a red stroke leaves only red non-white pixels", () => {
    const buf = rasterize(
      state({
        tool: "pen",
        color: "#ff0000",
        width: 5,
        points: [
          { x: 6, y: 6 },
          { x: 24, y: 20 },
        ],
      }),
    );
    let inked = 0;
    for (let i = 0; i < buf.length; i += 4) {
      const [r, g, b] = [buf[i]!, buf[i + 1]!, buf[i + 2]!];
      if (r === 255 && g === 255 && b === 255) continue;
      expect([r, g, b]).toEqual([255, 0, 0]);
      inked++;
    }
    expect(inked).toBeGreaterThan(50);
  });

  it("a single point stamps a disc around it", () => {
    const buf = rasterize(
      state({ tool: "pen", color: "#0000ff", width: 8, points: [{ x: 16, y: 16 }] }),
    );
    expect(pixel(buf, 16, 16)).toEqual([0, 0, 255, 255]);
    expect(pixel(buf, 16, 13)).toEqual([0, 0, 255, 255]);
    expect(pixel(buf, 16, 25)).toEqual([255, 255, 255, 255]);
  });

  it("the eraser paints white over earlier strokes", () => {
    const pen: Stroke = {
      tool: "pen",
      color: "#00aa00",
      width: 10,
      points: [
        { x: 4, y: 16 },
        { x: 28, y: 16 },
      ],
    };
    const eraser: Stroke = { tool: "eraser", color: "#123456", width: 12, points: [{ x: 16, y: 16 }] };
    const buf = rasterize(state(pen, eraser));
    expect(pixel(buf, 16, 16)).toEqual([255, 255, 255, 255]);
    expect(pixel(buf, 5, 16)).toEqual([0, 0xaa, 0, 255]);
  });

  it("is deterministic for a fixed stroke list", () => {
    const strokes: Stroke[] = [
      { tool: "pen", color: "#ff8800", width: 3, points: [{ x: 2.3, y: 7.9 }, { x: 29.1, y: 11.4 }] },
      { tool: "fill", color: "#2244cc", width: 1, points: [{ x: 1, y: 30 }] },
      { tool: "eraser", color: "#000000", width: 6, points: [{ x: 15, y: 9 }, { x: 18, y: 13 }] },
    ];
    const a = rasterize(state(...strokes));
    const b = rasterize(state(...strokes));
    expect(Buffer.from(a.buffer).equals(Buffer.from(b.buffer))).toBe(true);
  });
});

describe("flood fill", () => {
  // a 1px vertical line splits the canvas; fill one side only
  const wall: Stroke = {
    tool: "pen",
    color: "#000000",
    width: 1,
    points: [
      { x: 16, y: -2 },
      { x: 16, y: H + 2 },
    ],
  };

  it("fills a bounded region and stops at the boundary", () => {
    const buf = rasterize(
      state(wall, { tool: "fill", color: "#cc0000", width: 1, points: [{ x: 4, y: 4 }] }),
    );
    expect(pixel(buf, 2, 2)).toEqual([0xcc, 0, 0, 255]);
    expect(pixel(buf, 2, 29)).toEqual([0xcc, 0, 0, 255]);
    expect(pixel(buf, 30, 2)).toEqual([255, 255, 255, 255]);
  });

  it("filling with the color already there changes nothing", () => {
    const base = rasterize(state(wall));
    const buf = makeBlank(W, H);
    applyStroke(buf, W, H, wall);
    applyStroke(buf, W, H, { tool: "fill", color: "#ffffff", width: 1, points: [{ x: 4, y: 4 }] });
    expect(Buffer.from(buf.buffer).equals(Buffer.from(base.buffer))).toBe(true);
  });

  it("a seed outside the canvas is ignored", () => {
    const buf = rasterize(
      state({ tool: "fill", color: "#cc0000", width: 1, points: [{ x: -3, y: 99 }] }),
    );
    expect(buf.every((v) => v === 255)).toBe(true);
  });
});
