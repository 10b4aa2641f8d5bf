"""Color sketch synthesis from a photo-like raster.

Pipeline: freehand placement (a small random shift and rescale; a drawn
copy never lands exactly on its subject), edge-preserving smoothing, color
flattening to a small random palette size, then edge strokes (detected on
the smoothed image) painted in near-black on top. The result imitates a
human color sketch: a few flat color regions plus dark outline strokes,
roughly but not exactly where the photo has them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from ..validation import check_image, check_seed
from .edges import detect_edges
from .quantize import flatten_colors
from .smoothing import smooth_edge_preserving

STROKE_COLOR = (20, 20, 20)

_TAG_SKETCH = 320


@dataclass(frozen=True)
class SmoothingParams:
    spatial_radius: int = 3
    range_sigma: float = 40.0


@dataclass(frozen=True)
class SketchSynthParams:
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    k_min: int = 7
    k_max: int = 10
    canny_low: float = 50.0
    canny_high: float = 150.0
    offset_frac: float = 0.12  # max |shift| per axis, as a fraction of that side
    scale_low: float = 0.85
    scale_high: float = 1.15
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError(f"need 1 <= k_min <= k_max, got ({self.k_min}, {self.k_max})")
        if not 0 < self.canny_low < self.canny_high:
            raise ValueError(
                f"need 0 < canny_low < canny_high, got ({self.canny_low}, {self.canny_high})"
            )
        if not 0.0 <= self.offset_frac < 0.5:
            raise ValueError(f"offset_frac must lie in [0, 0.5), got {self.offset_frac}")
        if not 0 < self.scale_low <= self.scale_high:
            raise ValueError(
                f"need 0 < scale_low <= scale_high, got ({self.scale_low}, {self.scale_high})"
            )
        check_seed(self.seed)


def _freehand_placement(img: np.ndarray, params: SketchSynthParams, rng) -> np.ndarray:
    # draws are consumed even at identity settings so the stream stays
    # stable across configs
    h, w = img.shape[:2]
    dx = float(rng.uniform(-params.offset_frac, params.offset_frac)) * w
    dy = float(rng.uniform(-params.offset_frac, params.offset_frac)) * h
    scale = float(rng.uniform(params.scale_low, params.scale_high))
    if params.scale_low == params.scale_high:
        scale = params.scale_low
    if dx == 0.0 and dy == 0.0 and scale == 1.0:
        return img
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    inv = 1.0 / scale
    # output -> input mapping about the center, subject center moved by
    # (dx, dy); white fill
    coeffs = (inv, 0.0, cx - inv * (cx + dx), 0.0, inv, cy - inv * (cy + dy))
    pil = Image.fromarray(img, mode="RGB").transform(
        (w, h), Image.AFFINE, coeffs, resample=Image.BILINEAR, fillcolor=(255, 255, 255)
    )
    return np.asarray(pil, dtype=np.uint8)


def synthesize_color_sketch(
    img: np.ndarray, params: SketchSynthParams, item_key: int = 0
) -> np.ndarray:
    """Deterministic sketch for (params.seed, item_key).

    The palette size k is drawn uniformly from [k_min, k_max]; the output has
    at most k+1 distinct colors (flattened palette plus the stroke color).
    Placement happens before flattening, so the bound is unaffected by it.
    """
    check_image(img)
    rng = np.random.default_rng(
        np.random.SeedSequence([params.seed, _TAG_SKETCH, int(item_key)])
    )
    k = int(rng.integers(params.k_min, params.k_max + 1))
    placed = _freehand_placement(img, params, rng)
    smoothed = smooth_edge_preserving(
        placed, params.smoothing.spatial_radius, params.smoothing.range_sigma
    )
    flat = flatten_colors(smoothed, k, rng)
    edges = detect_edges(smoothed, params.canny_low, params.canny_high)
    out = flat.copy()
    out[edges] = np.array(STROKE_COLOR, dtype=np.uint8)
    return out
