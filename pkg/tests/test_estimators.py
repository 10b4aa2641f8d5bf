import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from sqnet.estimators import (
    ColorSketchSynthesizer,
    GridColorHistogramExtractor,
    QuadrupletEmbedder,
    SketchRetriever,
    StrokeColorHistogramExtractor,
    TfidfColorSimilarity,
)
from sqnet.features.histograms import (
    ColorHistogram,
    grid_color_histogram,
    stroke_color_histogram,
)
from sqnet.features.tfidf import build_color_corpus_index, color_similarity_tfidf
from sqnet.imaging.canvas import normalize_canvas
from sqnet.imaging.sketch import SketchSynthParams, synthesize_color_sketch
from sqnet.index import EmbeddingIndex
from sqnet.model import build_model, save_checkpoint
from sqnet.search import Searcher


def _photo(seed=0, side=24):
    rng = np.random.default_rng(seed)
    img = np.full((side, side, 3), 255, np.uint8)
    img[6:18, 6:18] = rng.integers(0, 255, size=3, dtype=np.uint8)
    return img


def _sketchlike(seed=0):
    img = np.full((24, 24, 3), 255, np.uint8)
    img[4:12, 4:12] = (200, 40, 40) if seed % 2 == 0 else (40, 40, 200)
    return img


class TestSynthesizer:
    def test_get_set_clone_round_trip(self):
        est = ColorSketchSynthesizer(k_min=5, k_max=8, seed=3)
        params = est.get_params()
        assert params["k_min"] == 5 and params["seed"] == 3
        est2 = clone(est)
        assert est2.get_params() == params
        est.set_params(k_max=9)
        assert est.get_params()["k_max"] == 9

    def test_transform_matches_direct_synthesis(self):
        est = ColorSketchSynthesizer(seed=1).fit([])
        photos = [_photo(0), _photo(1)]
        got = est.transform(photos)
        params = SketchSynthParams(seed=1)
        for i, img in enumerate(photos):
            assert np.array_equal(got[i], synthesize_color_sketch(img, params, item_key=i))

    def test_invalid_params_surface_at_fit(self):
        with pytest.raises(ValueError):
            ColorSketchSynthesizer(k_min=0).fit([])


class TestHistogramExtractors:
    def test_grid_rows_match_direct(self):
        est = GridColorHistogramExtractor().fit([])
        photos = [_photo(2), _photo(3)]
        got = est.transform(photos)
        assert got.shape == (2, 500)
        for i, img in enumerate(photos):
            assert np.array_equal(got[i], grid_color_histogram(img).weights)

    def test_stroke_rows_match_direct(self):
        est = StrokeColorHistogramExtractor().fit([])
        imgs = [_sketchlike(0), _sketchlike(1)]
        got = est.transform(imgs)
        assert got.shape == (2, 125)
        for i, img in enumerate(imgs):
            assert np.array_equal(got[i], stroke_color_histogram(img).counts)

    def test_empty_input(self):
        assert GridColorHistogramExtractor().fit([]).transform([]).shape == (0, 500)
        assert StrokeColorHistogramExtractor().fit([]).transform([]).shape == (0, 125)

    def test_pipeline_composition(self):
        pipe = Pipeline(
            [
                ("sketch", ColorSketchSynthesizer(seed=1)),
                ("hist", StrokeColorHistogramExtractor()),
            ]
        )
        out = pipe.fit_transform([_photo(4), _photo(5)])
        assert out.shape == (2, 125)


class TestTfidfColorSimilarity:
    def _counts(self, rng, n):
        return rng.integers(0, 20, size=(n, 125)).astype(np.float64)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(7)
        corpus_counts = self._counts(rng, 8)
        queries = self._counts(rng, 3)
        est = TfidfColorSimilarity().fit(corpus_counts)
        got = est.transform(queries)
        assert got.shape == (3, 8)
        corpus = build_color_corpus_index(
            [ColorHistogram(c, "single", "raw_counts") for c in corpus_counts]
        )
        for i in range(3):
            qh = ColorHistogram(queries[i], "single", "raw_counts")
            for j in range(8):
                want = color_similarity_tfidf(
                    qh, ColorHistogram(corpus_counts[j], "single", "raw_counts"), corpus
                )
                assert got[i, j] == want

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            TfidfColorSimilarity().transform(np.zeros((1, 125)))

    def test_bad_shapes(self):
        with pytest.raises(ValueError, match="125"):
            TfidfColorSimilarity().fit(np.zeros((3, 7)))
        est = TfidfColorSimilarity().fit(np.ones((2, 125)))
        with pytest.raises(ValueError, match="125"):
            est.transform(np.zeros(125))


@pytest.fixture(scope="module")
def ckpt(tmp_path_factory):
    model = build_model(
        embed_dim=6, class_count=3, input_side=16, conv_channels=(3, 4), hidden=10, seed=4
    )
    path = tmp_path_factory.mktemp("ckpt") / "model.sqnm"
    save_checkpoint(model, path)
    return path, model


@pytest.fixture(scope="module")
def fitted():
    rng = np.random.default_rng(10)
    model = build_model(
        embed_dim=6, class_count=3, input_side=16, conv_channels=(3, 4), hidden=10, seed=5
    )
    emb = rng.standard_normal((9, 6))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    index = EmbeddingIndex(
        ids=np.arange(50, 59),
        embeddings=emb.astype(np.float32).astype(np.float64),
        class_labels=rng.integers(0, 3, size=9),
    )
    return SketchRetriever(method="qnet", top_k=4).fit(index, model), index, model


class TestQuadrupletEmbedder:
    def test_transform_matches_direct_embedding(self, ckpt):
        path, model = ckpt
        est = QuadrupletEmbedder(checkpoint_path=path, branch="photo").fit()
        imgs = [_photo(8), _photo(9)]
        got = est.transform(imgs)
        assert got.shape == (2, 6)
        rows = [normalize_canvas(img, "photo", 16) for img in imgs]
        batch = np.stack(rows).transpose(0, 3, 1, 2).astype(np.float64) / 255.0
        assert np.array_equal(got, model.embed_batch(batch, "photo"))

    def test_unit_rows(self, ckpt):
        path, _ = ckpt
        est = QuadrupletEmbedder(checkpoint_path=path, branch="sketch").fit()
        emb = est.transform([_sketchlike(0)])
        assert np.abs(np.linalg.norm(emb, axis=1) - 1.0).max() < 1e-9

    def test_empty_input(self, ckpt):
        path, _ = ckpt
        est = QuadrupletEmbedder(checkpoint_path=path).fit()
        assert est.transform([]).shape == (0, 6)

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            QuadrupletEmbedder(checkpoint_path="x").transform([_sketchlike(0)])

    def test_fit_validation(self):
        with pytest.raises(ValueError, match="branch"):
            QuadrupletEmbedder(checkpoint_path="x", branch="audio").fit()
        with pytest.raises(ValueError, match="checkpoint_path"):
            QuadrupletEmbedder().fit()


class TestSketchRetriever:
    def test_query_matches_searcher(self, fitted):
        retriever, index, model = fitted
        sketches = [_sketchlike(0), _sketchlike(1)]
        got = retriever.query(sketches)
        searcher = Searcher(index, model)
        for sk, res in zip(sketches, got):
            assert res == searcher.search(sk, method="qnet", top_k=4)

    def test_predict_top1(self, fitted):
        retriever, _, _ = fitted
        sketches = [_sketchlike(0), _sketchlike(1)]
        preds = retriever.predict(sketches)
        assert preds.shape == (2,)
        for p, res in zip(preds, retriever.query(sketches)):
            assert p == res[0].item_id

    def test_predict_empty_index_rejected(self):
        model = build_model(
            embed_dim=6, class_count=3, input_side=16, conv_channels=(3, 4), hidden=10, seed=5
        )
        empty = EmbeddingIndex(
            ids=np.array([], dtype=np.int64),
            embeddings=np.zeros((0, 6)),
            class_labels=np.array([], dtype=np.int64),
        )
        retriever = SketchRetriever().fit(empty, model)
        with pytest.raises(ValueError, match="empty index"):
            retriever.predict([_sketchlike(0)])

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            SketchRetriever().query([_sketchlike(0)])

    def test_clone_keeps_params_only(self, fitted):
        retriever, _, _ = fitted
        fresh = clone(retriever)
        assert fresh.get_params() == retriever.get_params()
        assert not hasattr(fresh, "searcher_")
