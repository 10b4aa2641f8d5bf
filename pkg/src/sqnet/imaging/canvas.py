"""Canvas normalization: bring arbitrary rasters onto a fixed square side.

Sketches are tight-cropped to their drawn content, padded with white by 10%
of the largest content dimension, centered on a square, then resized.
Photos keep their aspect ratio and are letterboxed onto white.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from ..validation import check_image
from .color import luminance

WHITE_THRESH = 250.0


def _resize(img: np.ndarray, width: int, height: int) -> np.ndarray:
    if img.shape[0] == height and img.shape[1] == width:
        return img
    pil = Image.fromarray(img, mode="RGB").resize((width, height), Image.BILINEAR)
    return np.asarray(pil, dtype=np.uint8)


def content_bbox(img: np.ndarray, white_thresh: float = WHITE_THRESH):
    """Half-open (r0, r1, c0, c1) around non-white content, or None if blank."""
    check_image(img)
    mask = luminance(img) < white_thresh
    if not mask.any():
        return None
    rows = np.where(mask.any(axis=1))[0]
    cols = np.where(mask.any(axis=0))[0]
    return int(rows[0]), int(rows[-1]) + 1, int(cols[0]), int(cols[-1]) + 1


def normalize_canvas(img: np.ndarray, kind: str = "photo", side: int = 224) -> np.ndarray:
    """Return a side x side uint8 RGB canvas. kind is 'photo' or 'sketch'."""
    check_image(img)
    if kind not in ("photo", "sketch"):
        raise ValueError(f"kind must be 'photo' or 'sketch', got {kind!r}")
    if side < 8:
        raise ValueError(f"side must be >= 8, got {side}")

    if kind == "sketch":
        box = content_bbox(img)
        if box is None:
            # blank input: nothing to center, hand back a clean canvas
            return np.full((side, side, 3), 255, dtype=np.uint8)
        r0, r1, c0, c1 = box
        crop = img[r0:r1, c0:c1]
        h, w = crop.shape[:2]
        pad = max(1, round(0.10 * max(h, w)))
        sq = max(h, w) + 2 * pad
        canvas = np.full((sq, sq, 3), 255, dtype=np.uint8)
        top = (sq - h) // 2
        left = (sq - w) // 2
        canvas[top : top + h, left : left + w] = crop
        return _resize(canvas, side, side)

    h, w = img.shape[:2]
    scale = side / max(h, w)
    nh = max(1, round(h * scale))
    nw = max(1, round(w * scale))
    resized = _resize(img, nw, nh)
    canvas = np.full((side, side, 3), 255, dtype=np.uint8)
    top = (side - nh) // 2
    left = (side - nw) // 2
    canvas[top : top + nh, left : left + nw] = resized
    return canvas
