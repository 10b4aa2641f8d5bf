"""Binary histogram store (magic "SQCH").

Layout, little-endian throughout:
  magic 4 bytes "SQCH" | version u32 | layout_code u32 | bins u32 |
  normalization_code u32 | count u64 | records...
Record: item id u64 | bins x f64 raw counts.

Counts are whole numbers, exactly representable in f64, so a round trip
reproduces histograms bit for bit.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .histograms import LAYOUTS, ColorHistogram

MAGIC = b"SQCH"
VERSION = 1

_LAYOUT_CODES = {"grid2x2": 1, "single": 2}
_LAYOUT_NAMES = {v: k for k, v in _LAYOUT_CODES.items()}
_NORM_CODES = {"l1": 1, "raw_counts": 2}
_NORM_NAMES = {v: k for k, v in _NORM_CODES.items()}


class StoreFormatError(ValueError):
    pass


def save_histograms(path, ids, histograms: list[ColorHistogram]) -> None:
    ids = [int(i) for i in ids]
    if len(ids) != len(histograms):
        raise ValueError(f"{len(ids)} ids vs {len(histograms)} histograms")
    if not histograms:
        raise ValueError("refusing to write an empty histogram store")
    layout = histograms[0].layout
    norm = histograms[0].normalization
    for h in histograms:
        if h.layout != layout or h.normalization != norm:
            raise ValueError("all stored histograms must share layout and normalization")
    bins = LAYOUTS[layout]

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(
            struct.pack(
                "<IIIIQ", VERSION, _LAYOUT_CODES[layout], bins, _NORM_CODES[norm], len(ids)
            )
        )
        for item_id, h in zip(ids, histograms):
            fh.write(struct.pack("<Q", item_id))
            fh.write(h.counts.astype("<f8").tobytes())


def load_histograms(path) -> tuple[np.ndarray, list[ColorHistogram]]:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise StoreFormatError(f"{path}: bad magic {data[:4]!r}")
    version, layout_code, bins, norm_code, count = struct.unpack_from("<IIIIQ", data, 4)
    if version != VERSION:
        raise StoreFormatError(f"{path}: unsupported version {version}")
    if layout_code not in _LAYOUT_NAMES or norm_code not in _NORM_NAMES:
        raise StoreFormatError(f"{path}: unknown layout/normalization codes")
    layout = _LAYOUT_NAMES[layout_code]
    if bins != LAYOUTS[layout]:
        raise StoreFormatError(f"{path}: layout {layout} with {bins} bins")

    rec = 8 + bins * 8
    expected = 4 + 24 + count * rec
    if len(data) != expected:
        raise StoreFormatError(f"{path}: expected {expected} bytes, file has {len(data)}")

    ids = np.empty(count, dtype=np.int64)
    hists = []
    off = 28
    for i in range(count):
        (ids[i],) = struct.unpack_from("<Q", data, off)
        counts = np.frombuffer(data, dtype="<f8", count=bins, offset=off + 8).astype(np.float64)
        hists.append(
            ColorHistogram(counts=counts, layout=layout, normalization=_NORM_NAMES[norm_code])
        )
        off += rec
    return ids, hists
