"""Color flattening: weighted k-means over the distinct colors of an image.

Clustering unique colors (weighted by pixel count) instead of raw pixels
keeps the work proportional to palette size. Centroids are computed in
float64 and rounded to uint8 only when painting the output.
"""

from __future__ import annotations

import numpy as np

from ..validation import check_image

_TAG_FLATTEN = 310


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence([int(seed), _TAG_FLATTEN]))


def _kmeanspp_init(pts: np.ndarray, weights: np.ndarray, k: int, rng) -> np.ndarray:
    n = pts.shape[0]
    first = rng.choice(n, p=weights / weights.sum())
    centroids = [pts[first]]
    d2 = ((pts - centroids[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        mass = weights * d2
        total = mass.sum()
        if total <= 0:
            probs = weights / weights.sum()
        else:
            probs = mass / total
        idx = rng.choice(n, p=probs)
        centroids.append(pts[idx])
        d2 = np.minimum(d2, ((pts - pts[idx]) ** 2).sum(axis=1))
    return np.array(centroids, dtype=np.float64)


def flatten_colors(img: np.ndarray, k: int, seed) -> np.ndarray:
    """Reduce an image to at most k distinct colors.

    If the image already has <= k distinct colors it is returned unchanged;
    k=1 paints the rounded global mean color everywhere. `seed` is an int or
    a numpy Generator (clustering init is the only stochastic step).
    """
    check_image(img)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    h, w, _ = img.shape
    flat = img.reshape(-1, 3)

    if k == 1:
        mean = np.rint(flat.astype(np.float64).mean(axis=0))
        out = np.empty_like(img)
        out[:] = mean.astype(np.uint8)
        return out

    colors, inverse, counts = np.unique(flat, axis=0, return_inverse=True, return_counts=True)
    if colors.shape[0] <= k:
        return img.copy()

    rng = _as_rng(seed)
    pts = colors.astype(np.float64)
    wgt = counts.astype(np.float64)
    centroids = _kmeanspp_init(pts, wgt, k, rng)

    assign = np.full(pts.shape[0], -1, dtype=np.int64)
    for _ in range(100):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            members = assign == c
            if members.any():
                mw = wgt[members]
                centroids[c] = (pts[members] * mw[:, None]).sum(axis=0) / mw.sum()
            # empty cluster keeps its previous centroid

    palette = np.clip(np.rint(centroids), 0, 255).astype(np.uint8)
    return palette[assign][inverse].reshape(h, w, 3)
