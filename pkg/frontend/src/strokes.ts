/** Canvas drawing model: an ordered stroke list plus undo/redo history.
 *
 * Strokes are immutable once committed; undo and redo swap whole snapshots,
 * so any restored state is exactly (not just visually) a prior one.
 */

export type Tool = "pen" | "fill" | "eraser";

export interface Point {
  x: number;
  y: number;
}

export interface Stroke {
  tool: Tool;
  color: string; // #rrggbb
  width: number;
  points: Point[];
}

export interface CanvasState {
  width: number;
  height: number;
  strokes: readonly Stroke[];
}

function cloneStroke(s: Stroke): Stroke {
  return {
    tool: s.tool,
    color: s.color,
    width: s.width,
    points: s.points.map((p) => ({ x: p.x, y: p.y })),
  };
}

export class StrokeHistory {
  private past: Stroke[][] = [];
  private future: Stroke[][] = [];
  private current: Stroke[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  get state(): CanvasState {
    return { width: this.width, height: this.height, strokes: this.current };
  }

  get canUndo(): boolean {
    return this.past.length > 0;
  }

  get canRedo(): boolean {
    return this.future.length > 0;
  }

  /** Append one finished stroke; clears the redo branch. */
  commit(stroke: Stroke): void {
    if (stroke.points.length === 0) return;
    this.past.push(this.current);
    this.current = [...this.current, cloneStroke(stroke)];
    this.future = [];
  }

  undo(): boolean {
    const prev = this.past.pop();
    if (prev === undefined) return false;
    this.future.push(this.current);
    this.current = prev;
    return true;
  }

  redo(): boolean {
    const next = this.future.pop();
    if (next === undefined) return false;
    this.past.push(this.current);
    this.current = next;
    return true;
  }

  clear(): void {
    if (this.current.length === 0) return;
    this.past.push(this.current);
    this.current = [];
    this.future = [];
  }
}
