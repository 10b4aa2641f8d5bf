"""Estimator-style facades over the feature, embedding, and retrieval layers.

These follow the usual fit/transform/predict conventions (parameters stored
verbatim in __init__, learned state on trailing-underscore attributes, fit
returns self) so they compose with standard tooling. Training itself stays in
the training module; the embedder and retriever consume saved checkpoints.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .features.histograms import ColorHistogram, grid_color_histogram, stroke_color_histogram
from .features.tfidf import CorpusColorIndex, build_color_corpus_index, tfidf_similarity_many
from .imaging.canvas import normalize_canvas
from .imaging.sketch import SketchSynthParams, SmoothingParams, synthesize_color_sketch
from .index import EmbeddingIndex
from .model import load_checkpoint
from .search import Searcher
from .validation import check_image


def _check_fitted(est, attr: str):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class ColorSketchSynthesizer(TransformerMixin, BaseEstimator):
    """Turns photos into color sketches; stateless apart from parameters."""

    def __init__(self, k_min=7, k_max=10, spatial_radius=3, range_sigma=40.0,
                 canny_low=50.0, canny_high=150.0, seed=0):
        self.k_min = k_min
        self.k_max = k_max
        self.spatial_radius = spatial_radius
        self.range_sigma = range_sigma
        self.canny_low = canny_low
        self.canny_high = canny_high
        self.seed = seed

    def _params(self) -> SketchSynthParams:
        return SketchSynthParams(
            smoothing=SmoothingParams(
                spatial_radius=self.spatial_radius, range_sigma=self.range_sigma
            ),
            k_min=self.k_min,
            k_max=self.k_max,
            canny_low=self.canny_low,
            canny_high=self.canny_high,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        self._params()
        self.n_features_in_ = 0
        return self

    def transform(self, X) -> list[np.ndarray]:
        params = self._params()
        return [synthesize_color_sketch(check_image(img), params, item_key=i)
                for i, img in enumerate(X)]


class GridColorHistogramExtractor(TransformerMixin, BaseEstimator):
    """Images to 2x2-grid color weight vectors, one row per image."""

    def fit(self, X, y=None):
        self.n_features_in_ = 0
        return self

    def transform(self, X) -> np.ndarray:
        rows = [grid_color_histogram(check_image(img)).weights for img in X]
        return np.stack(rows) if rows else np.zeros((0, 500))


class StrokeColorHistogramExtractor(TransformerMixin, BaseEstimator):
    """Images to raw non-background color counts, one row per image."""

    def fit(self, X, y=None):
        self.n_features_in_ = 0
        return self

    def transform(self, X) -> np.ndarray:
        rows = [stroke_color_histogram(check_image(img)).counts for img in X]
        return np.stack(rows) if rows else np.zeros((0, 125))


class TfidfColorSimilarity(BaseEstimator):
    """Fits a color corpus; transform scores queries against every corpus row."""

    def fit(self, X, y=None):
        counts = np.asarray(X, dtype=np.float64)
        if counts.ndim != 2 or counts.shape[1] != 125:
            raise ValueError(f"X must be (n, 125) stroke counts, got {counts.shape}")
        hists = [ColorHistogram(c, "single", "raw_counts") for c in counts]
        self.corpus_counts_ = counts
        self.corpus_index_: CorpusColorIndex = build_color_corpus_index(hists)
        return self

    def transform(self, X) -> np.ndarray:
        _check_fitted(self, "corpus_index_")
        queries = np.asarray(X, dtype=np.float64)
        if queries.ndim != 2 or queries.shape[1] != 125:
            raise ValueError(f"X must be (n, 125) stroke counts, got {queries.shape}")
        out = np.empty((queries.shape[0], self.corpus_counts_.shape[0]))
        for i, q in enumerate(queries):
            hist = ColorHistogram(q, "single", "raw_counts")
            out[i] = tfidf_similarity_many(hist, self.corpus_counts_, self.corpus_index_)
        return out


class QuadrupletEmbedder(TransformerMixin, BaseEstimator):
    """Embeds images with a trained checkpoint's sketch or photo branch."""

    def __init__(self, checkpoint_path=None, branch="sketch"):
        self.checkpoint_path = checkpoint_path
        self.branch = branch

    def fit(self, X=None, y=None):
        if self.branch not in ("sketch", "photo"):
            raise ValueError(f"branch must be 'sketch' or 'photo', got {self.branch!r}")
        if self.checkpoint_path is None:
            raise ValueError("checkpoint_path is required")
        self.model_ = load_checkpoint(self.checkpoint_path)
        return self

    def transform(self, X) -> np.ndarray:
        _check_fitted(self, "model_")
        side = self.model_.config.input_side
        kind = "sketch" if self.branch == "sketch" else "photo"
        rows = [normalize_canvas(check_image(img), kind, side) for img in X]
        if not rows:
            return np.zeros((0, self.model_.config.embed_dim))
        batch = np.stack(rows).transpose(0, 3, 1, 2).astype(np.float64) / 255.0
        return self.model_.embed_batch(batch, self.branch)


class SketchRetriever(BaseEstimator):
    """Ranks an immutable index for query sketches.

    predict returns the top-1 item id per sketch; query returns full ranked
    result lists via the underlying searcher.
    """

    def __init__(self, method="qnet", top_k=10, gamma=0.5, omega=0.5):
        self.method = method
        self.top_k = top_k
        self.gamma = gamma
        self.omega = omega

    def fit(self, index: EmbeddingIndex, model, shape_model=None):
        self.searcher_ = Searcher(index, model, shape_model)
        return self

    def query(self, sketches) -> list:
        _check_fitted(self, "searcher_")
        return [
            self.searcher_.search(
                check_image(s), method=self.method, top_k=self.top_k,
                gamma=self.gamma, omega=self.omega,
            )
            for s in sketches
        ]

    def predict(self, sketches) -> np.ndarray:
        results = self.query(sketches)
        if any(not r for r in results):
            raise ValueError("cannot predict against an empty index")
        return np.array([r[0].item_id for r in results], dtype=np.int64)
