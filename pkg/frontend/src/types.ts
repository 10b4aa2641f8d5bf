export type Method = "qnet" | "baseline1" | "baseline2";

export interface QueryParams {
  method: Method;
  topk: number;
  /** Shape/color blend, only meaningful for baseline1. */
  gamma?: number;
  /** Geometric fusion weight, only meaningful for baseline2. */
  omega?: number;
}

/** One row of the ranked response, exactly as the service sends it. */
export interface ResultItem {
  id: number;
  score: number;
  rank: number;
  thumbnail_url: string;
  class_label: number;
}
