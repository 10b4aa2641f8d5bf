"""Input validation helpers shared across the package.

Every public entry point funnels untrusted arguments through these so error
messages stay consistent and tests can assert on them.
"""

from __future__ import annotations

import numpy as np


def check_image(img, name: str = "image") -> np.ndarray:
    """Validate an RGB raster: uint8 array of shape (H, W, 3), H, W >= 2."""
    if not isinstance(img, np.ndarray):
        raise TypeError(f"{name} must be a numpy array, got {type(img).__name__}")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"{name} must be uint8, got {img.dtype}")
    if img.shape[0] < 2 or img.shape[1] < 2:
        raise ValueError(f"{name} must be at least 2x2, got {img.shape[:2]}")
    return img


def check_positive(value, name: str):
    if not np.isscalar(value) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_nonnegative(value, name: str):
    if not np.isscalar(value) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a non-negative finite number, got {value!r}")
    return value


def check_fraction(value, name: str, *, open_ends: bool = True):
    """A float in (0, 1) (or [0, 1] when open_ends is False)."""
    v = float(value)
    if not np.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if open_ends and not (0.0 < v < 1.0):
        raise ValueError(f"{name} must lie strictly between 0 and 1, got {v}")
    if not open_ends and not (0.0 <= v <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {v}")
    return v


def check_seed(seed, name: str = "seed") -> int:
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise TypeError(f"{name} must be an integer, got {type(seed).__name__}")
    if seed < 0:
        raise ValueError(f"{name} must be non-negative, got {seed}")
    return int(seed)


def check_unit_rows(mat: np.ndarray, name: str = "embeddings", tol: float = 1e-6) -> np.ndarray:
    """Assert every row of a 2-d float array has unit L2 norm within tol."""
    if mat.ndim != 2:
        raise ValueError(f"{name} must be 2-d, got shape {mat.shape}")
    norms = np.linalg.norm(mat, axis=1)
    bad = np.where(np.abs(norms - 1.0) > tol)[0]
    if bad.size:
        raise ValueError(
            f"{name} rows {bad[:5].tolist()} are not unit-norm "
            f"(norms {norms[bad[:5]].tolist()})"
        )
    return mat
