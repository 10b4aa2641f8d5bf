"""Retrieval quality metrics and the evaluation report they roll up into.

Ranks are 1-based positions of the groundtruth photo in a full ranking of the
index. Average precision treats every same-class photo as relevant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def mrr(ranks) -> float:
    """Mean reciprocal rank; ranks are 1-based integers."""
    r = np.asarray(ranks, dtype=np.float64)
    if r.size == 0:
        raise ValueError("mrr needs at least one rank")
    if (r < 1).any():
        raise ValueError("ranks must be >= 1")
    return float((1.0 / r).mean())


def recall_ratio_curve(ranks, index_size: int) -> np.ndarray:
    """Fraction of queries whose groundtruth sits within the top N, N=1..index_size."""
    r = np.asarray(ranks, dtype=np.int64)
    if r.size == 0:
        raise ValueError("recall curve needs at least one rank")
    if index_size < 1 or (r > index_size).any():
        raise ValueError("ranks exceed the stated index size")
    hits = np.bincount(r, minlength=index_size + 1)[1:]
    return np.cumsum(hits) / r.size


def smallest_n_for_recall(ranks, index_size: int, target: float = 0.5) -> int:
    """Smallest N with recall ratio >= target; the curve reaches 1.0 so one exists."""
    curve = recall_ratio_curve(ranks, index_size)
    idx = np.argmax(curve >= target)
    if curve[idx] < target:
        raise ValueError(f"recall never reaches {target}")
    return int(idx) + 1


def average_precision(relevance) -> float:
    """AP of one ranked list; relevance is a boolean array in rank order.

    Mean of precision-at-hit over all relevant items; 0 when nothing relevant.
    """
    rel = np.asarray(relevance, dtype=bool)
    total = int(rel.sum())
    if total == 0:
        return 0.0
    positions = np.where(rel)[0] + 1
    hits = np.arange(1, total + 1, dtype=np.float64)
    return float((hits / positions).sum() / total)


def mean_average_precision(relevances) -> float:
    if not len(relevances):
        raise ValueError("mAP needs at least one query")
    return float(np.mean([average_precision(r) for r in relevances]))


@dataclass(frozen=True)
class QueryRecord:
    query_id: int
    groundtruth_id: int
    class_label: int
    rank: int
    ap: float


@dataclass
class EvalReport:
    method: str
    query_count: int
    index_size: int
    mrr: float
    mean_ap: float
    halfway_n: int  # smallest N whose recall ratio reaches 0.5
    zero_relevant_queries: int
    recall_curve: list = field(repr=False)  # [(N, fraction)]
    records: list = field(repr=False)  # [QueryRecord]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "query_count": self.query_count,
            "index_size": self.index_size,
            "mrr": self.mrr,
            "mean_ap": self.mean_ap,
            "halfway_n": self.halfway_n,
            "zero_relevant_queries": self.zero_relevant_queries,
            "recall_curve": [[int(n), float(f)] for n, f in self.recall_curve],
            "records": [
                {
                    "query_id": r.query_id,
                    "groundtruth_id": r.groundtruth_id,
                    "class_label": r.class_label,
                    "rank": r.rank,
                    "ap": r.ap,
                }
                for r in self.records
            ],
        }

    def save_json(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")


def evaluate_ranking(
    ordered_ids: np.ndarray,
    index_ids: np.ndarray,
    index_labels: np.ndarray,
    query_ids,
    groundtruth_ids,
    query_labels,
    method: str,
) -> EvalReport:
    """Roll per-query full rankings into an EvalReport.

    ordered_ids is (n_queries, index_size): item ids best-first per query.
    """
    ordered_ids = np.asarray(ordered_ids, dtype=np.int64)
    index_ids = np.asarray(index_ids, dtype=np.int64)
    index_labels = np.asarray(index_labels, dtype=np.int64)
    nq, n = ordered_ids.shape
    if n != index_ids.size:
        raise ValueError("ordered_ids width must equal the index size")
    label_lut = np.full(int(index_ids.max()) + 1 if n else 1, -1, dtype=np.int64)
    label_lut[index_ids] = index_labels

    ranks = np.empty(nq, dtype=np.int64)
    records = []
    zero_rel = 0
    aps = np.empty(nq, dtype=np.float64)
    for qi in range(nq):
        row = ordered_ids[qi]
        gt = int(groundtruth_ids[qi])
        hit = np.where(row == gt)[0]
        if not hit.size:
            raise ValueError(f"groundtruth {gt} missing from ranking of query {query_ids[qi]}")
        ranks[qi] = hit[0] + 1
        row_labels = label_lut[row]
        rel = row_labels == int(query_labels[qi])
        if not rel.any():
            zero_rel += 1
        aps[qi] = average_precision(rel)
        records.append(
            QueryRecord(
                query_id=int(query_ids[qi]),
                groundtruth_id=gt,
                class_label=int(query_labels[qi]),
                rank=int(ranks[qi]),
                ap=float(aps[qi]),
            )
        )

    curve = recall_ratio_curve(ranks, n)
    return EvalReport(
        method=method,
        query_count=nq,
        index_size=n,
        mrr=mrr(ranks),
        mean_ap=float(aps.mean()),
        halfway_n=smallest_n_for_recall(ranks, n),
        zero_relevant_queries=zero_rel,
        recall_curve=[(i + 1, float(curve[i])) for i in range(n)],
        records=records,
    )
