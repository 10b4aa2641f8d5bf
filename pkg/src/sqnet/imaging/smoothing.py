"""Edge-preserving smoothing.

A bilateral filter: each output pixel is a normalized sum of its window,
weighted by a spatial Gaussian and by a Gaussian on squared RGB distance, so
flat regions average while high-contrast boundaries stay put. Vectorized as
a shift-and-accumulate over window offsets (no per-pixel Python loop).
"""

from __future__ import annotations

import numpy as np

from ..validation import check_image, check_positive


def smooth_edge_preserving(
    img: np.ndarray,
    spatial_radius: int = 3,
    range_sigma: float = 40.0,
    spatial_sigma: float | None = None,
) -> np.ndarray:
    """Bilateral-filter an RGB image.

    spatial_radius: window half-width in pixels (window is (2r+1)^2).
    range_sigma: Gaussian sigma on Euclidean RGB distance (0..255 scale).
    spatial_sigma: defaults to spatial_radius / 2. Borders replicate edges.
    """
    check_image(img)
    if spatial_radius < 1:
        raise ValueError(f"spatial_radius must be >= 1, got {spatial_radius}")
    check_positive(range_sigma, "range_sigma")
    if spatial_sigma is None:
        spatial_sigma = spatial_radius / 2.0
    check_positive(spatial_sigma, "spatial_sigma")

    r = int(spatial_radius)
    f = img.astype(np.float64)
    h, w, _ = f.shape
    pad = np.pad(f, ((r, r), (r, r), (0, 0)), mode="edge")

    acc = np.zeros_like(f)
    wsum = np.zeros((h, w), dtype=np.float64)
    inv_range = -0.5 / (range_sigma * range_sigma)
    inv_space = -0.5 / (spatial_sigma * spatial_sigma)

    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            shifted = pad[r + dy : r + dy + h, r + dx : r + dx + w]
            diff2 = ((shifted - f) ** 2).sum(axis=2)
            wgt = np.exp(inv_space * (dx * dx + dy * dy) + inv_range * diff2)
            wsum += wgt
            acc += shifted * wgt[..., None]

    out = acc / wsum[..., None]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
