"""Color space helpers and the hue/gray variant expansion.

HSV uses hue in degrees [0, 360), saturation and value in [0, 1]. Luminance
is ITU-R BT.601 (0.299, 0.587, 0.114) everywhere the package needs one.
"""

from __future__ import annotations

import numpy as np

from ..validation import check_image

HUE_SHIFTS_DEG = (72.0, 144.0, 216.0, 288.0)
GRAY_TARGETS = (0.35, 0.60)
FOREGROUND_LUM_FRACTION = 0.9

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def luminance(img: np.ndarray) -> np.ndarray:
    """BT.601 luminance in [0, 255] float64."""
    return img.astype(np.float64) @ LUMA_WEIGHTS


def rgb_to_hsv(rgb: np.ndarray) -> np.ndarray:
    """Vectorized over leading dims; rgb float in [0, 1] -> (h deg, s, v)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    delta = maxc - minc
    safe = np.where(delta == 0, 1.0, delta)

    h = np.zeros_like(maxc)
    rmax = (maxc == r) & (delta > 0)
    gmax = (maxc == g) & (delta > 0) & ~rmax
    bmax = (delta > 0) & ~rmax & ~gmax
    h = np.where(rmax, ((g - b) / safe) % 6.0, h)
    h = np.where(gmax, (b - r) / safe + 2.0, h)
    h = np.where(bmax, (r - g) / safe + 4.0, h)
    h = (h * 60.0) % 360.0

    s = np.where(maxc == 0, 0.0, delta / np.where(maxc == 0, 1.0, maxc))
    return np.stack([h, s, maxc], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    hsv = np.asarray(hsv, dtype=np.float64)
    h = (hsv[..., 0] % 360.0) / 60.0
    s = np.clip(hsv[..., 1], 0.0, 1.0)
    v = np.clip(hsv[..., 2], 0.0, 1.0)
    i = np.floor(h).astype(np.int64) % 6
    f = h - np.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    # sector table: i -> (r, g, b)
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def hue_shift(img: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate hue by `degrees`, preserving saturation and value."""
    check_image(img)
    hsv = rgb_to_hsv(img.astype(np.float64) / 255.0)
    hsv[..., 0] = (hsv[..., 0] + degrees) % 360.0
    out = hsv_to_rgb(hsv) * 255.0
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def gray_variant(img: np.ndarray, target_mean: float) -> np.ndarray:
    """Grayscale rendition with foreground mean luminance pulled to target.

    Foreground = pixels darker than FOREGROUND_LUM_FRACTION of the maximum
    possible luminance; the (near-white) background is left as its own
    luminance. target_mean is a fraction of full scale.
    """
    check_image(img)
    lum = luminance(img)
    fg = lum < FOREGROUND_LUM_FRACTION * 255.0
    gray = lum.copy()
    if fg.any():
        mean_fg = lum[fg].mean()
        if mean_fg > 0:
            gray[fg] = lum[fg] * (target_mean * 255.0 / mean_fg)
    g8 = np.clip(np.rint(gray), 0, 255).astype(np.uint8)
    return np.repeat(g8[..., None], 3, axis=2)


def make_variants(img: np.ndarray) -> list[np.ndarray]:
    """Six derived renditions: four fixed hue rotations, two gray levels."""
    check_image(img)
    out = [hue_shift(img, d) for d in HUE_SHIFTS_DEG]
    out.extend(gray_variant(img, t) for t in GRAY_TARGETS)
    return out
