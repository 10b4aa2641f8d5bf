"""Corpus expansion: color variants and sketch derivation over a catalog.

Both steps write PNGs under the source catalog's root and return a new
catalog. Variant items get fresh ids above the existing range but keep the
instance_id of their source; sketch items reuse the id of the photo they
were derived from (the two catalogs live in separate manifests, and shared
ids are what ties a sketch query to its groundtruth photo).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .catalog import Catalog, CatalogItem
from .imaging.color import GRAY_TARGETS, HUE_SHIFTS_DEG, gray_variant, hue_shift
from .imaging.sketch import SketchSynthParams, synthesize_color_sketch
from .raster import load_png, save_png


def _base_color_count(catalog: Catalog) -> int:
    groups = {it.color_group for it in catalog.items if it.origin == "original"}
    if not groups:
        raise ValueError("catalog has no original items to expand")
    return max(groups) + 1


def variant_color_group(base_group: int, slot: int, base_colors: int) -> int:
    """Slot 0 is the original; 1-4 are hue rotations; 5-6 the gray levels.

    Injective per instance: hue slot j maps its base group g to j*B + g, and
    the two gray slots share the 5*B block regardless of g.
    """
    if slot == 0:
        return base_group
    if 1 <= slot <= 4:
        return slot * base_colors + base_group
    if slot in (5, 6):
        return 5 * base_colors + (slot - 5)
    raise ValueError(f"variant slot must be in [0, 6], got {slot}")


def expand_with_variants(catalog: Catalog) -> Catalog:
    """Add the six color renditions of every original item.

    Returns a catalog whose items are the originals followed by variants in
    a fixed (item, slot) order, so output is deterministic given the input.
    """
    if catalog.root is None:
        raise ValueError("catalog must have a root directory to write variants")
    base_colors = _base_color_count(catalog)
    originals = [it for it in catalog.items if it.origin == "original"]
    next_id = max(it.id for it in catalog.items) + 1

    items = list(catalog.items)
    for src in originals:
        img = load_png(catalog.image_file(src))
        renditions = [hue_shift(img, d) for d in HUE_SHIFTS_DEG]
        renditions += [gray_variant(img, t) for t in GRAY_TARGETS]
        for slot, vimg in enumerate(renditions, start=1):
            rel = f"images/{next_id:06d}.png"
            save_png(Path(catalog.root) / rel, vimg)
            items.append(
                CatalogItem(
                    id=next_id,
                    image_path=rel,
                    class_label=src.class_label,
                    instance_id=src.instance_id,
                    color_group=variant_color_group(src.color_group, slot, base_colors),
                    origin="hue_variant" if slot <= 4 else "gray_variant",
                )
            )
            next_id += 1
    return Catalog(items=items, class_count=catalog.class_count, root=catalog.root)


def synthesize_sketch_catalog(
    catalog: Catalog, params: SketchSynthParams, subdir: str = "sketches"
) -> Catalog:
    """Derive one sketch per catalog item, keyed by the item's id."""
    if catalog.root is None:
        raise ValueError("catalog must have a root directory to write sketches")
    items = []
    for it in catalog.items:
        img = load_png(catalog.image_file(it))
        sk = synthesize_color_sketch(img, params, item_key=it.id)
        rel = f"{subdir}/{it.id:06d}.png"
        save_png(Path(catalog.root) / rel, sk)
        items.append(
            CatalogItem(
                id=it.id,
                image_path=rel,
                class_label=it.class_label,
                instance_id=it.instance_id,
                color_group=it.color_group,
                origin="sketch",
            )
        )
    return Catalog(items=items, class_count=catalog.class_count, root=catalog.root)
