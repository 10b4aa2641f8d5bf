import { inflateSync } from "node:zlib";
import { describe, expect, it } from "vitest";
import { adler32, crc32, encodePng } from "../src/png";
import { rasterize } from "../src/raster";
import { StrokeHistory, type Stroke } from "../src/strokes";

/** Minimal independent reader: walk chunks, inflate IDAT with node:zlib. */
function decode(png: Uint8Array) {
  expect(Array.from(png.subarray(0, 8))).toEqual([137, 80, 78, 71, 13, 10, 26, 10]);
  const view = new DataView(png.buffer, png.byteOffset, png.byteLength);
  let pos = 8;
  const chunks: { type: string; data: Uint8Array }[] = [];
  while (pos < png.length) {
    const len = view.getUint32(pos);
    const type = String.fromCharCode(...png.subarray(pos + 4, pos + 8));
    chunks.push({ type, data: png.subarray(pos + 8, pos + 8 + len) });
    pos += 12 + len;
  }
  const ihdr = chunks[0]!;
  expect(ihdr.type).toBe("IHDR");
  const hv = new DataView(ihdr.data.buffer, ihdr.data.byteOffset);
  const width = hv.getUint32(0);
  const height = hv.getUint32(4);
  expect(ihdr.data[8]).toBe(8); // bit depth
  expect(ihdr.data[9]).toBe(6); // RGBA
  expect(chunks[chunks.length - 1]!.type).toBe("IEND");

  const idat = Buffer.concat(
    chunks.filter((c) => c.type === "IDAT").map((c) => Buffer.from(c.data)),
  );
  const raw = inflateSync(idat); // validates zlib header, blocks, adler32
  expect(raw.length).toBe(height * (1 + width * 4));
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let y = 0; y < height; y++) {
    const row = y * (1 + width * 4);
    expect(raw[row]).toBe(0); // filter: none
    pixels.set(raw.subarray(row + 1, row + 1 + width * 4), y * width * 4);
  }
  return { width, height, pixels };
}

const stroke: Stroke = {
  tool: "pen",
  color: "#dd2211",
  width: 7,
  points: [
    { x: 40, y: 50 },
    { x: 300, y: 310.5 },
    { x: 120, y: 400 },
  ],
};

describe("checksums", () => {
  it("crc32 matches the canonical check values", () => {
    expect(crc32(new Uint8Array(0))).toBe(0);
    expect(crc32(new TextEncoder().encode("123456789"))).toBe(0xcbf43926);
  });

  it("adler32 matches the canonical check value", () => {
    expect(adler32(new TextEncoder().encode("Wikipedia"))).toBe(0x11e60398);
  });
});

describe("encodePng", () => {
  it("empty canvas exports an all-white PNG of canvas size", () => {
    const side = 448;
    const png = encodePng(rasterize({ width: side, height: side, strokes: [] }), side, side);
    const got = decode(png);
    expect(got.width).toBe(side);
    expect(got.height).toBe(side);
    expect(got.pixels.every((v) => v === 255)).toBe(true);
  });

  it("round-trips pixels through an independent inflate", () => {
    const buf = rasterize({ width: 448, height: 448, strokes: [stroke] });
    const got = decode(encodePng(buf, 448, 448));
    expect(Buffer.from(got.pixels.buffer).equals(Buffer.from(buf.buffer))).toBe(true);
  });

  it("ends with the well-known IEND chunk bytes", () => {
    const png = encodePng(rasterize({ width: 16, height: 16, strokes: [] }), 16, 16);
    // length 0, "IEND", crc32("IEND") = 0xAE426082
    expect(Array.from(png.subarray(png.length - 12))).toEqual([
      0, 0, 0, 0, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
    ]);
  });

  it("rejects a buffer that does not match the dimensions", () => {
    expect(() => encodePng(new Uint8ClampedArray(12), 2, 2)).toThrow(/RGBA/);
  });

  it("same pixels, same bytes", () => {
    const buf = rasterize({ width: 448, height: 448, strokes: [stroke] });
    const a = encodePng(buf, 448, 448);
    const b = encodePng(buf, 448, 448);
    expect(Buffer.from(a).equals(Buffer.from(b))).toBe(true);
  });

  it("draw, undo, redraw identically gives a byte-identical export", () => {
    const exportPng = (h: StrokeHistory) =>
      encodePng(rasterize(h.state), h.state.width, h.state.height);

    const h = new StrokeHistory(448, 448);
    h.commit(stroke);
    const first = exportPng(h);

    h.undo();
    const blank = encodePng(rasterize({ width: 448, height: 448, strokes: [] }), 448, 448);
    expect(Buffer.from(exportPng(h)).equals(Buffer.from(blank))).toBe(true);
    h.commit({ ...stroke, points: stroke.points.map((p) => ({ ...p })) });
    const second = exportPng(h);

    expect(Buffer.from(first).equals(Buffer.from(second))).toBe(true);
  });
});
