"""Training-time augmentation: small geometric and color perturbations.

Each call draws its parameters from a seed stream keyed by caller-supplied
integers (epoch, item, role, ...) so repeated runs replay identical draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from ..validation import check_image, check_seed
from .color import hsv_to_rgb, rgb_to_hsv

_TAG_AUGMENT = 330


@dataclass(frozen=True)
class AugmentConfig:
    rotation_deg: float = 20.0
    scale_low: float = 0.90
    scale_high: float = 1.10
    hflip_prob: float = 0.5
    hue_jitter_deg: float = 10.0
    sat_jitter: float = 0.10
    val_jitter: float = 0.10
    seed: int = 0

    def __post_init__(self):
        if self.rotation_deg < 0:
            raise ValueError(f"rotation_deg must be >= 0, got {self.rotation_deg}")
        if not 0 < self.scale_low <= self.scale_high:
            raise ValueError(
                f"need 0 < scale_low <= scale_high, got ({self.scale_low}, {self.scale_high})"
            )
        if not 0 <= self.hflip_prob <= 1:
            raise ValueError(f"hflip_prob must be in [0, 1], got {self.hflip_prob}")
        if self.hue_jitter_deg < 0 or self.sat_jitter < 0 or self.val_jitter < 0:
            raise ValueError("jitter ranges must be >= 0")
        check_seed(self.seed)


@dataclass(frozen=True)
class AugmentDraw:
    rotation: float
    scale: float
    hflip: bool
    hue_delta: float
    sat_factor: float
    val_factor: float

    @property
    def is_identity(self) -> bool:
        return (
            self.rotation == 0.0
            and self.scale == 1.0
            and not self.hflip
            and self.hue_delta == 0.0
            and self.sat_factor == 1.0
            and self.val_factor == 1.0
        )


def draw_augment(config: AugmentConfig, rng: np.random.Generator) -> AugmentDraw:
    # fixed draw order keeps the stream stable across config values
    rotation = float(rng.uniform(-config.rotation_deg, config.rotation_deg))
    scale = float(rng.uniform(config.scale_low, config.scale_high))
    hflip = bool(rng.random() < config.hflip_prob)
    hue_delta = float(rng.uniform(-config.hue_jitter_deg, config.hue_jitter_deg))
    sat_factor = float(1.0 + rng.uniform(-config.sat_jitter, config.sat_jitter))
    val_factor = float(1.0 + rng.uniform(-config.val_jitter, config.val_jitter))
    if config.scale_low == config.scale_high:
        scale = config.scale_low
    return AugmentDraw(rotation, scale, hflip, hue_delta, sat_factor, val_factor)


def apply_augment(img: np.ndarray, draw: AugmentDraw) -> np.ndarray:
    check_image(img)
    if draw.is_identity:
        return img.copy()

    out = img
    if draw.rotation != 0.0 or draw.scale != 1.0:
        h, w = out.shape[:2]
        cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
        th = math.radians(draw.rotation)
        inv = 1.0 / draw.scale
        a = math.cos(th) * inv
        b = math.sin(th) * inv
        # output -> input mapping about the image center, white fill
        coeffs = (a, b, cx - a * cx - b * cy, -b, a, cy + b * cx - a * cy)
        pil = Image.fromarray(out, mode="RGB").transform(
            (w, h), Image.AFFINE, coeffs, resample=Image.BILINEAR, fillcolor=(255, 255, 255)
        )
        out = np.asarray(pil, dtype=np.uint8)

    if draw.hflip:
        out = out[:, ::-1]

    if draw.hue_delta != 0.0 or draw.sat_factor != 1.0 or draw.val_factor != 1.0:
        hsv = rgb_to_hsv(out.astype(np.float64) / 255.0)
        hsv[..., 0] = (hsv[..., 0] + draw.hue_delta) % 360.0
        hsv[..., 1] = np.clip(hsv[..., 1] * draw.sat_factor, 0.0, 1.0)
        hsv[..., 2] = np.clip(hsv[..., 2] * draw.val_factor, 0.0, 1.0)
        out = np.clip(np.rint(hsv_to_rgb(hsv) * 255.0), 0, 255).astype(np.uint8)
    elif draw.hflip and out.base is not None:
        out = out.copy()
    return out


def augment(img: np.ndarray, config: AugmentConfig, item_key=0) -> np.ndarray:
    """One augmented rendition, deterministic in (config.seed, item_key)."""
    if isinstance(item_key, (int, np.integer)):
        keys = [int(item_key)]
    else:
        keys = [int(k) for k in item_key]
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _TAG_AUGMENT, *keys]))
    return apply_augment(img, draw_augment(config, rng))
