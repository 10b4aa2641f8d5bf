from .histograms import (
    BACKGROUND_LUM,
    BACKGROUND_SAT,
    BINS_PER_CELL,
    ColorHistogram,
    color_bin_index,
    grid_color_histogram,
    histogram_distance,
    non_background_mask,
    stroke_color_histogram,
)
from .store import StoreFormatError, load_histograms, save_histograms
from .tfidf import (
    CorpusColorIndex,
    build_color_corpus_index,
    color_similarity_tfidf,
    tfidf_similarity_many,
)

__all__ = [
    "BACKGROUND_LUM",
    "BACKGROUND_SAT",
    "BINS_PER_CELL",
    "ColorHistogram",
    "CorpusColorIndex",
    "StoreFormatError",
    "build_color_corpus_index",
    "color_bin_index",
    "color_similarity_tfidf",
    "grid_color_histogram",
    "histogram_distance",
    "load_histograms",
    "non_background_mask",
    "save_histograms",
    "stroke_color_histogram",
    "tfidf_similarity_many",
]
