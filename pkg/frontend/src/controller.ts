/** Search state machine, kept free of DOM so it can be tested headless.
 *
 * Owns the query parameters, the last result list, and a status banner.
 * Whatever happens, the previous results stay on screen until a newer
 * response actually lands; errors only change the banner.
 */

import { QuerySuperseded } from "./api.js";
import type { Method, QueryParams, ResultItem } from "./types.js";

export interface Banner {
  kind: "idle" | "loading" | "ok" | "error";
  message: string;
}

interface ClientLike {
  query(png: Uint8Array, params: QueryParams): Promise<ResultItem[]>;
}

export class SearchController {
  private seq = 0;
  private lastPng: Uint8Array | null = null;
  private _results: readonly ResultItem[] = [];
  private _banner: Banner = { kind: "idle", message: "Draw a sketch, then search." };

  method: Method = "qnet";
  gamma = 0.5;
  omega = 0.5;
  topk = 20;

  constructor(
    private readonly client: ClientLike,
    private readonly onChange: () => void = () => {},
  ) {}

  get results(): readonly ResultItem[] {
    return this._results;
  }

  get banner(): Banner {
    return this._banner;
  }

  params(): QueryParams {
    const p: QueryParams = { method: this.method, topk: this.topk };
    if (this.method === "baseline1") p.gamma = this.gamma;
    if (this.method === "baseline2") p.omega = this.omega;
    return p;
  }

  /** Send a freshly exported sketch; remembered for later re-queries. */
  async submit(png: Uint8Array): Promise<void> {
    this.lastPng = png;
    await this.run();
  }

  /** Re-run the last sketch, e.g. after an error. */
  async retry(): Promise<void> {
    await this.requery();
  }

  async setMethod(method: Method): Promise<void> {
    if (method === this.method) return;
    this.method = method;
    this.onChange();
    await this.requery();
  }

  async setGamma(value: number): Promise<void> {
    this.gamma = value;
    this.onChange();
    if (this.method === "baseline1") await this.requery();
  }

  async setOmega(value: number): Promise<void> {
    this.omega = value;
    this.onChange();
    if (this.method === "baseline2") await this.requery();
  }

  async setTopk(value: number): Promise<void> {
    this.topk = value;
    this.onChange();
    await this.requery();
  }

  private async requery(): Promise<void> {
    if (this.lastPng !== null) await this.run();
  }

  private async run(): Promise<void> {
    const png = this.lastPng;
    if (png === null) return;
    const seq = ++this.seq;
    this._banner = { kind: "loading", message: "Searching..." };
    this.onChange();
    const t0 = Date.now();
    try {
      const items = await this.client.query(png, this.params());
      if (seq !== this.seq) return; // a newer query owns the state now
      this._results = items;
      this._banner = { kind: "ok", message: `${items.length} results in ${Date.now() - t0} ms` };
      this.onChange();
    } catch (err) {
      if (seq !== this.seq || err instanceof QuerySuperseded) return;
      const message = err instanceof Error ? err.message : String(err);
      this._banner = { kind: "error", message };
      this.onChange();
    }
  }
}
