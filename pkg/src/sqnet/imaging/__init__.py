from .augment import AugmentConfig, AugmentDraw, apply_augment, augment, draw_augment
from .canvas import content_bbox, normalize_canvas
from .color import (
    GRAY_TARGETS,
    HUE_SHIFTS_DEG,
    gray_variant,
    hsv_to_rgb,
    hue_shift,
    luminance,
    make_variants,
    rgb_to_hsv,
)
from .edges import detect_edges
from .quantize import flatten_colors
from .sketch import STROKE_COLOR, SketchSynthParams, SmoothingParams, synthesize_color_sketch
from .smoothing import smooth_edge_preserving

__all__ = [
    "AugmentConfig",
    "AugmentDraw",
    "GRAY_TARGETS",
    "HUE_SHIFTS_DEG",
    "STROKE_COLOR",
    "SketchSynthParams",
    "SmoothingParams",
    "apply_augment",
    "augment",
    "content_bbox",
    "detect_edges",
    "draw_augment",
    "flatten_colors",
    "gray_variant",
    "hsv_to_rgb",
    "hue_shift",
    "luminance",
    "make_variants",
    "normalize_canvas",
    "rgb_to_hsv",
    "smooth_edge_preserving",
    "synthesize_color_sketch",
]
