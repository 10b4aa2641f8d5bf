/** HTTP client for the retrieval service.
 *
 * One query may be in flight at a time: issuing a new one aborts the old,
 * which surfaces as QuerySuperseded so callers can ignore it quietly.
 */

import type { QueryParams, ResultItem } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number = 0,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class QuerySuperseded extends Error {
  constructor() {
    super("query superseded by a newer one");
    this.name = "QuerySuperseded";
  }
}

export class QueryTimeout extends Error {
  constructor(ms: number) {
    super(`query timed out after ${ms} ms`);
    this.name = "QueryTimeout";
  }
}

const B64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

/** Portable base64 (no btoa: it chokes on large binary strings). */
export function bytesToBase64(bytes: Uint8Array): string {
  const parts: string[] = [];
  for (let i = 0; i < bytes.length; i += 3) {
    const b0 = bytes[i]!;
    const b1 = i + 1 < bytes.length ? bytes[i + 1]! : 0;
    const b2 = i + 2 < bytes.length ? bytes[i + 2]! : 0;
    const n = (b0 << 16) | (b1 << 8) | b2;
    parts.push(
      B64[(n >>> 18) & 63]!,
      B64[(n >>> 12) & 63]!,
      i + 1 < bytes.length ? B64[(n >>> 6) & 63]! : "=",
      i + 2 < bytes.length ? B64[n & 63]! : "=",
    );
  }
  return parts.join("");
}

export interface HealthInfo {
  status: string;
  index_size: number;
  embed_dim: number;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function checkItem(raw: unknown, pos: number): ResultItem {
  const it = raw as Record<string, unknown>;
  if (
    typeof it !== "object" ||
    it === null ||
    typeof it["id"] !== "number" ||
    typeof it["score"] !== "number" ||
    typeof it["rank"] !== "number" ||
    typeof it["thumbnail_url"] !== "string" ||
    typeof it["class_label"] !== "number"
  ) {
    throw new ApiError(`malformed result at position ${pos}`);
  }
  return {
    id: it["id"],
    score: it["score"],
    rank: it["rank"],
    thumbnail_url: it["thumbnail_url"],
    class_label: it["class_label"],
  };
}

export class QueryClient {
  private inflight: AbortController | null = null;

  constructor(
    readonly baseUrl: string = "",
    readonly timeoutMs: number = 10000,
    private readonly fetchImpl: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  get hasInflight(): boolean {
    return this.inflight !== null;
  }

  async health(): Promise<HealthInfo> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/health`);
    if (!res.ok) throw new ApiError(`health check failed (${res.status})`, res.status);
    return (await res.json()) as HealthInfo;
  }

  /** POST the sketch and return the ranked items, server order preserved. */
  async query(png: Uint8Array, params: QueryParams): Promise<ResultItem[]> {
    this.inflight?.abort("superseded");
    const ctrl = new AbortController();
    this.inflight = ctrl;
    const timer =
      this.timeoutMs > 0 ? setTimeout(() => ctrl.abort("timeout"), this.timeoutMs) : null;

    const body: Record<string, unknown> = {
      image_base64: bytesToBase64(png),
      method: params.method,
      topk: params.topk,
    };
    if (params.gamma !== undefined) body["gamma"] = params.gamma;
    if (params.omega !== undefined) body["omega"] = params.omega;

    try {
      const res = await this.fetchImpl(`${this.baseUrl}/api/query`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
        signal: ctrl.signal,
      });
      if (!res.ok) {
        const text = await res.text().catch(() => "");
        throw new ApiError(`query failed (${res.status})${text ? `: ${text}` : ""}`, res.status);
      }
      const data: unknown = await res.json();
      if (!Array.isArray(data)) throw new ApiError("expected a ranked list in the response");
      return data.map(checkItem);
    } catch (err) {
      // the signal is authoritative: mock and real fetches throw different
      // error shapes on abort
      if (ctrl.signal.aborted) {
        if (ctrl.signal.reason === "timeout") throw new QueryTimeout(this.timeoutMs);
        throw new QuerySuperseded();
      }
      throw err;
    } finally {
      if (timer !== null) clearTimeout(timer);
      if (this.inflight === ctrl) this.inflight = null;
    }
  }
}
