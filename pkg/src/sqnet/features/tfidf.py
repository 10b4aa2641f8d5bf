"""Color tf-idf similarity between a sketch histogram and indexed photos.

Shared occupied bins contribute (1 + ln f_sk)(1 + ln f_ph)(1 + ln(N / f_b)),
normalized by the product of per-document norms M = sqrt(sum (1 + ln f)^2)
over each document's own occupied bins. Natural log throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .histograms import BINS_PER_CELL, ColorHistogram


@dataclass(frozen=True)
class CorpusColorIndex:
    n_images: int
    doc_freq: np.ndarray  # int64, per-bin number of images whose count > 0

    def __post_init__(self):
        df = np.asarray(self.doc_freq, dtype=np.int64)
        if df.shape != (BINS_PER_CELL,):
            raise ValueError(f"doc_freq must have {BINS_PER_CELL} bins, got {df.shape}")
        if self.n_images < 1:
            raise ValueError(f"n_images must be >= 1, got {self.n_images}")
        if (df < 0).any() or (df > self.n_images).any():
            raise ValueError("doc_freq entries must lie in [0, n_images]")
        object.__setattr__(self, "doc_freq", df)


def build_color_corpus_index(histograms: list[ColorHistogram]) -> CorpusColorIndex:
    if not histograms:
        raise ValueError("cannot build a corpus index from an empty histogram list")
    df = np.zeros(BINS_PER_CELL, dtype=np.int64)
    for h in histograms:
        if h.layout != "single":
            raise ValueError(f"corpus histograms must use the 'single' layout, got {h.layout!r}")
        df += h.counts > 0
    return CorpusColorIndex(n_images=len(histograms), doc_freq=df)


def _log_tf(counts: np.ndarray) -> np.ndarray:
    """1 + ln(count) on occupied bins, 0 elsewhere, full bin length."""
    occ = counts > 0
    return np.where(occ, 1.0 + np.log(np.where(occ, counts, 1.0)), 0.0)


def _doc_norm(counts: np.ndarray) -> float:
    tf = _log_tf(counts)
    return float(np.sqrt((tf * tf).sum()))


def _idf(index: CorpusColorIndex) -> np.ndarray:
    df = index.doc_freq
    with np.errstate(divide="ignore"):
        return np.where(df > 0, 1.0 + np.log(index.n_images / np.maximum(df, 1)), 0.0)


def color_similarity_tfidf(
    sketch_hist: ColorHistogram, photo_hist: ColorHistogram, index: CorpusColorIndex
) -> float:
    """Similarity >= 0; 0 when either histogram is empty or none overlap."""
    if sketch_hist.layout != "single" or photo_hist.layout != "single":
        raise ValueError("tf-idf similarity needs 'single' layout histograms")
    sk, ph = sketch_hist.counts, photo_hist.counts
    if sketch_hist.is_empty or photo_hist.is_empty:
        return 0.0
    shared = (sk > 0) & (ph > 0)
    if not shared.any():
        return 0.0
    assert (index.doc_freq[shared] > 0).all(), "indexed photo has bins the corpus never saw"
    # Padded full-length arrays keep the arithmetic order identical to the
    # vectorized variant below, so both give bitwise-equal scores.
    contrib = np.where(shared, (_log_tf(sk) * _log_tf(ph)) * _idf(index), 0.0)
    return float(contrib.sum() / (_doc_norm(sk) * _doc_norm(ph)))


def tfidf_similarity_many(
    sketch_hist: ColorHistogram, photo_counts: np.ndarray, index: CorpusColorIndex
) -> np.ndarray:
    """Vectorized sketch-vs-corpus scores; photo_counts is (n, 125) raw counts.

    Matches color_similarity_tfidf row for row.
    """
    sk = sketch_hist.counts
    photo_counts = np.ascontiguousarray(photo_counts, dtype=np.float64)
    n = photo_counts.shape[0]
    if sketch_hist.is_empty:
        return np.zeros(n, dtype=np.float64)
    tf_sk = _log_tf(sk)
    tf_ph = _log_tf(photo_counts)
    shared = (sk > 0)[None, :] & (photo_counts > 0)
    contrib = np.where(shared, (tf_sk[None, :] * tf_ph) * _idf(index)[None, :], 0.0)
    m_ph = np.sqrt((tf_ph * tf_ph).sum(axis=1))
    m_sk = _doc_norm(sk)
    denom = m_sk * m_ph
    safe = np.where(denom == 0.0, 1.0, denom)
    return np.where(denom == 0.0, 0.0, contrib.sum(axis=1) / safe)
