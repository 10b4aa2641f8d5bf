/** DOM wiring. Everything testable lives in the other modules; this file
 * just connects them to the page. */

import { QueryClient } from "./api.js";
import { SearchController } from "./controller.js";
import { applyStroke, rasterize } from "./raster.js";
import { encodePng } from "./png.js";
import { StrokeHistory } from "./strokes.js";
import type { Point, Stroke, Tool } from "./strokes.js";
import type { Method } from "./types.js";

const SIDE = 448;
const GRAY_SWATCHES = ["#000000", "#404040", "#808080", "#c0c0c0", "#ffffff"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function hsvToHex(h: number, s: number, v: number): string {
  const c = v * s;
  const x = c * (1 - Math.abs(((h / 60) % 2) - 1));
  const m = v - c;
  let r = 0;
  let g = 0;
  let b = 0;
  if (h < 60) [r, g, b] = [c, x, 0];
  else if (h < 120) [r, g, b] = [x, c, 0];
  else if (h < 180) [r, g, b] = [0, c, x];
  else if (h < 240) [r, g, b] = [0, x, c];
  else if (h < 300) [r, g, b] = [x, 0, c];
  else [r, g, b] = [c, 0, x];
  const to2 = (u: number) =>
    Math.round((u + m) * 255)
      .toString(16)
      .padStart(2, "0");
  return `#${to2(r)}${to2(g)}${to2(b)}`;
}

const canvas = el<HTMLCanvasElement>("sketch");
canvas.width = SIDE;
canvas.height = SIDE;
const ctx = canvas.getContext("2d");
if (ctx === null) throw new Error("2d canvas unavailable");

const history = new StrokeHistory(SIDE, SIDE);
let viewBuf = rasterize(history.state);
let liveStroke: Stroke | null = null;

let tool: Tool = "pen";
let brushWidth = 8;
let hue = 0;
let sat = 1;
let val = 1;
let color = hsvToHex(hue, sat, val);

function paint() {
  const pixels = viewBuf as Uint8ClampedArray<ArrayBuffer>;
  ctx!.putImageData(new ImageData(pixels, SIDE, SIDE), 0, 0);
}

function rerender() {
  viewBuf = rasterize(history.state);
  paint();
  el<HTMLButtonElement>("undo").disabled = !history.canUndo;
  el<HTMLButtonElement>("redo").disabled = !history.canRedo;
}

function canvasPoint(ev: PointerEvent): Point {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * SIDE,
    y: ((ev.clientY - rect.top) / rect.height) * SIDE,
  };
}

canvas.addEventListener("pointerdown", (ev) => {
  ev.preventDefault();
  const p = canvasPoint(ev);
  if (tool === "fill") {
    history.commit({ tool, color, width: 1, points: [p] });
    rerender();
    return;
  }
  canvas.setPointerCapture(ev.pointerId);
  liveStroke = { tool, color, width: brushWidth, points: [p] };
  applyStroke(viewBuf, SIDE, SIDE, liveStroke);
  paint();
});

canvas.addEventListener("pointermove", (ev) => {
  if (liveStroke === null) return;
  const prev = liveStroke.points[liveStroke.points.length - 1]!;
  const p = canvasPoint(ev);
  liveStroke.points.push(p);
  // paint just the new segment; pen stamps are idempotent so this matches
  // a full re-render of the stroke
  applyStroke(viewBuf, SIDE, SIDE, { ...liveStroke, points: [prev, p] });
  paint();
});

function endStroke() {
  if (liveStroke === null) return;
  history.commit(liveStroke);
  liveStroke = null;
  rerender();
}

canvas.addEventListener("pointerup", endStroke);
canvas.addEventListener("pointercancel", endStroke);

// --- toolbar ---

function selectTool(next: Tool) {
  tool = next;
  for (const t of ["pen", "fill", "eraser"] as const) {
    el<HTMLButtonElement>(`tool-${t}`).classList.toggle("active", t === next);
  }
}
for (const t of ["pen", "fill", "eraser"] as const) {
  el<HTMLButtonElement>(`tool-${t}`).addEventListener("click", () => selectTool(t));
}

el<HTMLInputElement>("brush-width").addEventListener("input", (ev) => {
  brushWidth = Number((ev.target as HTMLInputElement).value);
  el<HTMLSpanElement>("brush-width-label").textContent = `${brushWidth}px`;
});

function setColor(next: string) {
  color = next;
  el<HTMLDivElement>("color-preview").style.background = next;
  for (const b of document.querySelectorAll<HTMLButtonElement>(".gray-swatch")) {
    b.classList.toggle("active", b.dataset["color"] === next);
  }
}

function pickerChanged() {
  hue = Number(el<HTMLInputElement>("hue").value);
  sat = Number(el<HTMLInputElement>("saturation").value) / 100;
  val = Number(el<HTMLInputElement>("value").value) / 100;
  setColor(hsvToHex(hue, sat, val));
  const satEl = el<HTMLInputElement>("saturation");
  satEl.style.background = `linear-gradient(to right, ${hsvToHex(hue, 0, val)}, ${hsvToHex(hue, 1, val)})`;
}
for (const id of ["hue", "saturation", "value"]) {
  el<HTMLInputElement>(id).addEventListener("input", pickerChanged);
}

const grays = el<HTMLDivElement>("gray-swatches");
for (const g of GRAY_SWATCHES) {
  const b = document.createElement("button");
  b.className = "gray-swatch";
  b.dataset["color"] = g;
  b.style.background = g;
  b.title = g;
  b.addEventListener("click", () => setColor(g));
  grays.appendChild(b);
}

el<HTMLButtonElement>("undo").addEventListener("click", () => {
  history.undo();
  rerender();
});
el<HTMLButtonElement>("redo").addEventListener("click", () => {
  history.redo();
  rerender();
});
el<HTMLButtonElement>("clear").addEventListener("click", () => {
  history.clear();
  rerender();
});

document.addEventListener("keydown", (ev) => {
  if (!(ev.ctrlKey || ev.metaKey)) return;
  if (ev.key === "z" && !ev.shiftKey) {
    history.undo();
    rerender();
    ev.preventDefault();
  } else if (ev.key === "y" || (ev.key === "z" && ev.shiftKey)) {
    history.redo();
    rerender();
    ev.preventDefault();
  }
});

// --- search side ---

const client = new QueryClient("");
const controller = new SearchController(client, renderSearch);

function renderSearch() {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = controller.banner.message;
  banner.className = `banner ${controller.banner.kind}`;
  el<HTMLButtonElement>("retry").hidden = controller.banner.kind !== "error";

  const grid = el<HTMLDivElement>("results");
  grid.replaceChildren();
  for (const item of controller.results) {
    const cell = document.createElement("figure");
    cell.className = "result";
    const img = document.createElement("img");
    img.src = item.thumbnail_url;
    img.alt = `item ${item.id}`;
    const cap = document.createElement("figcaption");
    cap.textContent = `#${item.rank}  ${item.score.toFixed(3)}  class ${item.class_label}`;
    cell.append(img, cap);
    grid.appendChild(cell);
  }

  el<HTMLDivElement>("gamma-row").hidden = controller.method !== "baseline1";
  el<HTMLDivElement>("omega-row").hidden = controller.method !== "baseline2";
}

el<HTMLButtonElement>("search").addEventListener("click", () => {
  const png = encodePng(rasterize(history.state), SIDE, SIDE);
  void controller.submit(png);
});
el<HTMLButtonElement>("retry").addEventListener("click", () => void controller.retry());

el<HTMLSelectElement>("method").addEventListener("change", (ev) => {
  void controller.setMethod((ev.target as HTMLSelectElement).value as Method);
});

el<HTMLInputElement>("gamma").addEventListener("input", (ev) => {
  el<HTMLSpanElement>("gamma-label").textContent = (ev.target as HTMLInputElement).value;
});
el<HTMLInputElement>("gamma").addEventListener("change", (ev) => {
  void controller.setGamma(Number((ev.target as HTMLInputElement).value));
});
el<HTMLInputElement>("omega").addEventListener("input", (ev) => {
  el<HTMLSpanElement>("omega-label").textContent = (ev.target as HTMLInputElement).value;
});
el<HTMLInputElement>("omega").addEventListener("change", (ev) => {
  void controller.setOmega(Number((ev.target as HTMLInputElement).value));
});
el<HTMLInputElement>("topk").addEventListener("change", (ev) => {
  const raw = Number((ev.target as HTMLInputElement).value);
  void controller.setTopk(Math.max(1, Math.min(100, Math.round(raw) || 20)));
});

// --- boot ---

selectTool("pen");
pickerChanged();
rerender();
renderSearch();

client
  .health()
  .then((h) => {
    el<HTMLSpanElement>("health").textContent =
      `index: ${h.index_size} items, ${h.embed_dim}-d embeddings`;
  })
  .catch(() => {
    el<HTMLSpanElement>("health").textContent = "service unreachable";
  });
