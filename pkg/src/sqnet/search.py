"""Ranked retrieval over an embedding index.

Three ranking methods share one tie-break rule (ascending item id):

- "qnet": euclidean distance between query and index embeddings, ascending.
- "baseline1": fused distance (1 - gamma) * shape + gamma * color, ascending.
- "baseline2": geometric fusion sim_color^omega * cos^(1 - omega), descending.

Both baselines score shape with the pre-hinge checkpoint's embeddings and
color with histogram features, so they need an index built with baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features.histograms import ColorHistogram, grid_color_histogram, stroke_color_histogram
from .features.tfidf import tfidf_similarity_many
from .imaging.canvas import normalize_canvas
from .index import EmbeddingIndex
from .model import DualBranchModel
from .validation import check_fraction, check_image

METHODS = ("qnet", "baseline1", "baseline2")


@dataclass(frozen=True)
class RankedResult:
    item_id: int
    score: float
    rank: int  # 1-based, consecutive
    ascending: bool  # True when lower scores are better (distances)


def fused_distance(shape_dist, color_dist, gamma: float):
    """(1 - gamma) * shape + gamma * color; exact passthrough at the endpoints."""
    check_fraction(gamma, "gamma", open_ends=False)
    return (1.0 - gamma) * np.asarray(shape_dist) + gamma * np.asarray(color_dist)


def fused_similarity_geometric(color_sim, cosine, omega: float):
    """color^omega * max(cos, 0)^(1 - omega); 0^0 evaluates to 1 at the endpoints."""
    check_fraction(omega, "omega", open_ends=False)
    color = np.asarray(color_sim, dtype=np.float64)
    cos = np.maximum(np.asarray(cosine, dtype=np.float64), 0.0)
    return np.power(color, omega) * np.power(cos, 1.0 - omega)


def _ranked(index: EmbeddingIndex, scores: np.ndarray, ascending: bool, top_k) -> list[RankedResult]:
    key = scores if ascending else -scores
    order = np.lexsort((index.ids, key))
    if top_k is not None:
        if top_k < 0:
            raise ValueError(f"top_k must be >= 0, got {top_k}")
        order = order[:top_k]
    return [
        RankedResult(
            item_id=int(index.ids[row]),
            score=float(scores[row]),
            rank=pos + 1,
            ascending=ascending,
        )
        for pos, row in enumerate(order)
    ]


class Searcher:
    """Embeds query sketches and ranks an index.

    `model` produces the retrieval embeddings; `shape_model` (defaults to
    `model`) produces the shape scores the baselines fuse with color.
    """

    def __init__(
        self,
        index: EmbeddingIndex,
        model: DualBranchModel,
        shape_model: DualBranchModel | None = None,
    ):
        self.index = index
        self.model = model
        self.shape_model = shape_model if shape_model is not None else model

    def _embed(self, sketch: np.ndarray, model: DualBranchModel) -> np.ndarray:
        canvas = normalize_canvas(sketch, "sketch", model.config.input_side)
        batch = canvas[None].transpose(0, 3, 1, 2).astype(np.float64) / 255.0
        return model.embed_batch(batch, "sketch")[0]

    def embedding_distances(self, query_emb: np.ndarray) -> np.ndarray:
        diff = self.index.embeddings - query_emb[None, :]
        return np.sqrt((diff * diff).sum(axis=1))

    def _require_baseline(self, method: str):
        if self.index.baseline is None:
            raise ValueError(f"method {method!r} needs an index built with baseline features")
        return self.index.baseline

    def rank_qnet(self, sketch: np.ndarray, top_k=None) -> list[RankedResult]:
        check_image(sketch)
        if not len(self.index):
            return []
        dist = self.embedding_distances(self._embed(sketch, self.model))
        return _ranked(self.index, dist, ascending=True, top_k=top_k)

    def rank_baseline1(self, sketch: np.ndarray, gamma: float = 0.5, top_k=None) -> list[RankedResult]:
        check_image(sketch)
        check_fraction(gamma, "gamma", open_ends=False)
        if not len(self.index):
            return []
        base = self._require_baseline("baseline1")
        qemb = self._embed(sketch, self.shape_model)
        diff = base.shape_embeddings - qemb[None, :]
        shape_dist = np.sqrt((diff * diff).sum(axis=1)) / 2.0
        qhist = grid_color_histogram(sketch)
        totals = base.grid_counts.sum(axis=1)
        weights = np.where(totals[:, None] > 0, base.grid_counts / np.maximum(totals, 1.0)[:, None], 0.0)
        color_dist = np.minimum(1.0, 0.5 * np.abs(weights - qhist.weights[None, :]).sum(axis=1))
        fused = fused_distance(shape_dist, color_dist, gamma)
        return _ranked(self.index, fused, ascending=True, top_k=top_k)

    def rank_baseline2(self, sketch: np.ndarray, omega: float = 0.5, top_k=None) -> list[RankedResult]:
        check_image(sketch)
        check_fraction(omega, "omega", open_ends=False)
        if not len(self.index):
            return []
        base = self._require_baseline("baseline2")
        qemb = self._embed(sketch, self.shape_model)
        cosine = base.shape_embeddings @ qemb
        qhist = stroke_color_histogram(sketch)
        color_sim = tfidf_similarity_many(qhist, base.stroke_counts, base.corpus)
        sim = fused_similarity_geometric(color_sim, cosine, omega)
        return _ranked(self.index, sim, ascending=False, top_k=top_k)

    def search(
        self,
        sketch: np.ndarray,
        method: str = "qnet",
        top_k: int | None = 10,
        gamma: float = 0.5,
        omega: float = 0.5,
    ) -> list[RankedResult]:
        if method == "qnet":
            return self.rank_qnet(sketch, top_k=top_k)
        if method == "baseline1":
            return self.rank_baseline1(sketch, gamma=gamma, top_k=top_k)
        if method == "baseline2":
            return self.rank_baseline2(sketch, omega=omega, top_k=top_k)
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")

    def rank_of(self, results: list[RankedResult], item_id: int) -> int:
        for r in results:
            if r.item_id == item_id:
                return r.rank
        raise KeyError(f"item {item_id} not in result list")


def euclidean_matrix(queries: np.ndarray, items: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Pairwise euclidean distances, (n_queries, n_items), chunked over queries."""
    nq = queries.shape[0]
    out = np.empty((nq, items.shape[0]), dtype=np.float64)
    for s in range(0, nq, chunk):
        diff = queries[s : s + chunk, None, :] - items[None, :, :]
        out[s : s + chunk] = np.sqrt((diff * diff).sum(axis=2))
    return out


def order_rows(index: EmbeddingIndex, scores: np.ndarray, ascending: bool) -> np.ndarray:
    """Full per-query rankings: (n_queries, index_size) of item ids, best first."""
    key = scores if ascending else -scores
    out = np.empty(scores.shape, dtype=np.int64)
    for qi in range(scores.shape[0]):
        out[qi] = index.ids[np.lexsort((index.ids, key[qi]))]
    return out


def baseline1_components(
    index: EmbeddingIndex, query_shape_embs: np.ndarray, query_grid_hists
) -> tuple[np.ndarray, np.ndarray]:
    """Shape-distance and color-distance matrices, ready to fuse at any gamma."""
    base = index.baseline
    if base is None:
        raise ValueError("index was built without baseline features")
    shape = euclidean_matrix(query_shape_embs, base.shape_embeddings) / 2.0
    totals = base.grid_counts.sum(axis=1)
    weights = np.where(
        totals[:, None] > 0, base.grid_counts / np.maximum(totals, 1.0)[:, None], 0.0
    )
    color = np.empty_like(shape)
    for qi, hist in enumerate(query_grid_hists):
        color[qi] = np.minimum(1.0, 0.5 * np.abs(weights - hist.weights[None, :]).sum(axis=1))
    return shape, color


def baseline2_components(
    index: EmbeddingIndex, query_shape_embs: np.ndarray, query_stroke_hists
) -> tuple[np.ndarray, np.ndarray]:
    """Color-similarity and cosine matrices, ready to fuse at any omega."""
    base = index.baseline
    if base is None:
        raise ValueError("index was built without baseline features")
    cosine = query_shape_embs @ base.shape_embeddings.T
    color = np.empty_like(cosine)
    for qi, hist in enumerate(query_stroke_hists):
        color[qi] = tfidf_similarity_many(hist, base.stroke_counts, base.corpus)
    return color, cosine
