"""Quantized RGB color histograms.

Each channel is quantized into 5 levels via floor(v * 5 / 256), giving 125
bins per cell. The grid variant concatenates a 2x2 spatial grid (row-major
cells, 500 bins total) and reads out L1-normalized; the stroke variant keeps
a single cell over non-background pixels and reads out raw counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..imaging.color import luminance, rgb_to_hsv
from ..validation import check_image

BINS_PER_CHANNEL = 5
BINS_PER_CELL = BINS_PER_CHANNEL**3

LAYOUTS = {"grid2x2": 4 * BINS_PER_CELL, "single": BINS_PER_CELL}

BACKGROUND_LUM = 245.0
BACKGROUND_SAT = 0.1


@dataclass(frozen=True)
class ColorHistogram:
    counts: np.ndarray  # float64 raw per-bin counts (whole numbers)
    layout: str  # "grid2x2" | "single"
    normalization: str = "l1"  # how `weights` reads out: "l1" | "raw_counts"

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.normalization not in ("l1", "raw_counts"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        c = np.asarray(self.counts, dtype=np.float64)
        if c.shape != (LAYOUTS[self.layout],):
            raise ValueError(
                f"layout {self.layout} needs {LAYOUTS[self.layout]} bins, got shape {c.shape}"
            )
        if (c < 0).any():
            raise ValueError("histogram counts must be non-negative")
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def is_empty(self) -> bool:
        return self.total == 0.0

    @property
    def weights(self) -> np.ndarray:
        if self.normalization == "raw_counts":
            return self.counts
        t = self.total
        if t == 0.0:
            return np.zeros_like(self.counts)
        return self.counts / t


def color_bin_index(pixels: np.ndarray) -> np.ndarray:
    """Flat bin index r*25 + g*5 + b for uint8 RGB pixels (..., 3)."""
    p = pixels.astype(np.int64)
    q = p * BINS_PER_CHANNEL // 256
    return q[..., 0] * 25 + q[..., 1] * 5 + q[..., 2]


def _cell_counts(pixels: np.ndarray) -> np.ndarray:
    if pixels.size == 0:
        return np.zeros(BINS_PER_CELL, dtype=np.float64)
    idx = color_bin_index(pixels.reshape(-1, 3))
    return np.bincount(idx, minlength=BINS_PER_CELL).astype(np.float64)


def grid_color_histogram(img: np.ndarray) -> ColorHistogram:
    """2x2 grid of 125-bin cell histograms, L1-normalized over all 500 bins."""
    check_image(img)
    h, w, _ = img.shape
    h2, w2 = h // 2, w // 2
    cells = [img[:h2, :w2], img[:h2, w2:], img[h2:, :w2], img[h2:, w2:]]
    counts = np.concatenate([_cell_counts(c) for c in cells])
    return ColorHistogram(counts=counts, layout="grid2x2", normalization="l1")


def non_background_mask(
    img: np.ndarray, bg_lum: float = BACKGROUND_LUM, bg_sat: float = BACKGROUND_SAT
) -> np.ndarray:
    """Pixels that count as drawn content: not (bright AND unsaturated)."""
    lum = luminance(img)
    sat = rgb_to_hsv(img.astype(np.float64) / 255.0)[..., 1]
    return (lum <= bg_lum) | (sat >= bg_sat)


def stroke_color_histogram(
    img: np.ndarray, bg_lum: float = BACKGROUND_LUM, bg_sat: float = BACKGROUND_SAT
) -> ColorHistogram:
    """125-bin raw-count histogram over non-background pixels.

    An all-background image yields an empty histogram (is_empty flags it;
    similarity against it reads as 0).
    """
    check_image(img)
    mask = non_background_mask(img, bg_lum, bg_sat)
    counts = _cell_counts(img[mask])
    return ColorHistogram(counts=counts, layout="single", normalization="raw_counts")


def histogram_distance(h1: ColorHistogram, h2: ColorHistogram) -> float:
    """L1/2 distance between L1-normalized weight vectors, in [0, 1]."""
    if h1.layout != h2.layout:
        raise ValueError(f"layout mismatch: {h1.layout} vs {h2.layout}")
    w1 = h1.counts / h1.total if not h1.is_empty else np.zeros_like(h1.counts)
    w2 = h2.counts / h2.total if not h2.is_empty else np.zeros_like(h2.counts)
    # normalization rounding can push disjoint histograms an ulp past 1
    return float(min(1.0, np.abs(w1 - w2).sum() / 2.0))
