"""PNG raster io.

Images are plain numpy arrays: shape (H, W, 3), dtype uint8, RGB order.
Pillow handles the codec; saves are deterministic (no timestamps, fixed
compression settings) so identical pixels give identical files.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .validation import check_image


def load_png(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"image file not found: {path}")
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        return np.asarray(rgb, dtype=np.uint8)


def save_png(path, img: np.ndarray) -> None:
    check_image(img)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(img, mode="RGB").save(path, format="PNG", compress_level=6)


def decode_png_bytes(data: bytes) -> np.ndarray:
    """Decode an in-memory PNG (or any Pillow-readable) byte string."""
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def encode_png_bytes(img: np.ndarray) -> bytes:
    check_image(img)
    buf = io.BytesIO()
    Image.fromarray(img, mode="RGB").save(buf, format="PNG", compress_level=6)
    return buf.getvalue()
