"""Catalog data model and the synthetic shape corpus generator.

A catalog is a flat list of items, each pointing at one PNG on disk plus the
labels retrieval needs: shape class, instance identity (variants of the same
rendered item share it), and a color_group slot that distinguishes the
original palette color from its hue-shifted and grayscale derivatives.

Manifests are line-delimited UTF-8 with tab-separated fields so they diff
cleanly and parse without a dependency.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .raster import save_png
from .validation import check_fraction, check_seed

ORIGINS = ("original", "hue_variant", "gray_variant", "sketch")

SHAPE_NAMES = ("circle", "square", "triangle", "star", "ring", "cross", "diamond", "hexagon")

MANIFEST_MAGIC = "sqnet-catalog"
MANIFEST_VERSION = "v1"

# purpose tags for seed sequences, so different stages never share streams
_TAG_TOYGEN = 101


@dataclass(frozen=True)
class CatalogItem:
    id: int
    image_path: str  # relative to the catalog root
    class_label: int
    instance_id: int
    color_group: int
    origin: str

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}, expected one of {ORIGINS}")
        if self.id < 0 or self.class_label < 0 or self.instance_id < 0 or self.color_group < 0:
            raise ValueError(f"negative field in catalog item {self}")


@dataclass
class Catalog:
    items: list[CatalogItem]
    class_count: int
    root: Path | None = None

    def __post_init__(self):
        ids = [it.id for it in self.items]
        if len(set(ids)) != len(ids):
            seen, dupes = set(), set()
            for i in ids:
                (dupes if i in seen else seen).add(i)
            raise ValueError(f"duplicate item ids in catalog: {sorted(dupes)[:10]}")
        if self.class_count < 1:
            raise ValueError(f"class_count must be >= 1, got {self.class_count}")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def by_id(self) -> dict[int, CatalogItem]:
        return {it.id: it for it in self.items}

    def image_file(self, item: CatalogItem) -> Path:
        if self.root is None:
            raise ValueError("catalog has no root directory; load it from a manifest or set root")
        return Path(self.root) / item.image_path

    def instance_ids(self) -> list[int]:
        return sorted({it.instance_id for it in self.items})


@dataclass(frozen=True)
class ToyConfig:
    shape_classes: int = 8
    base_colors: int = 5
    items_per_class: int = 200
    canvas: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.shape_classes < 2:
            raise ValueError(f"shape_classes must be >= 2, got {self.shape_classes}")
        if self.shape_classes > len(SHAPE_NAMES):
            raise ValueError(
                f"shape_classes must be <= {len(SHAPE_NAMES)} "
                f"(available shape kinds), got {self.shape_classes}"
            )
        if self.base_colors < 2:
            raise ValueError(f"base_colors must be >= 2, got {self.base_colors}")
        if self.items_per_class < 1:
            raise ValueError(f"items_per_class must be >= 1, got {self.items_per_class}")
        if self.canvas < 16:
            raise ValueError(f"canvas side must be >= 16, got {self.canvas}")
        check_seed(self.seed)


def base_palette(n_colors: int) -> np.ndarray:
    """Evenly hue-spaced palette, shape (n, 3) uint8."""
    cols = []
    for k in range(n_colors):
        r, g, b = colorsys.hsv_to_rgb(k / n_colors, 0.8, 0.85)
        cols.append([round(r * 255), round(g * 255), round(b * 255)])
    return np.array(cols, dtype=np.uint8)


def _poly_mask(xs, ys, verts):
    # even-odd ray casting; horizontal edges contribute nothing by the strict/
    # non-strict comparison pairing
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        crosses = (ys < y0) != (ys < y1)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (ys - y0) * (x1 - x0) / (y1 - y0)
        hit = crosses & (xs < xint)
        inside ^= np.where(np.isnan(xint), False, hit)
    return inside


def _regular_poly(cx, cy, r, n, phase_deg):
    ang = np.deg2rad(phase_deg + 360.0 * np.arange(n) / n)
    return list(zip(cx + r * np.cos(ang), cy - r * np.sin(ang)))


def _shape_mask(name: str, side: int, cx: float, cy: float, r: float) -> np.ndarray:
    ys, xs = np.mgrid[0:side, 0:side].astype(np.float64)
    xs += 0.5
    ys += 0.5
    dx, dy = xs - cx, ys - cy
    if name == "circle":
        return dx * dx + dy * dy <= r * r
    if name == "square":
        h = 0.82 * r
        return (np.abs(dx) <= h) & (np.abs(dy) <= h)
    if name == "triangle":
        return _poly_mask(xs, ys, _regular_poly(cx, cy, r, 3, 90.0))
    if name == "star":
        ang = np.deg2rad(90.0 + 36.0 * np.arange(10))
        rad = np.where(np.arange(10) % 2 == 0, r, 0.45 * r)
        verts = list(zip(cx + rad * np.cos(ang), cy - rad * np.sin(ang)))
        return _poly_mask(xs, ys, verts)
    if name == "ring":
        d2 = dx * dx + dy * dy
        return (d2 <= r * r) & (d2 >= (0.55 * r) ** 2)
    if name == "cross":
        w = 0.34 * r
        return ((np.abs(dx) <= w) & (np.abs(dy) <= r)) | ((np.abs(dy) <= w) & (np.abs(dx) <= r))
    if name == "diamond":
        return np.abs(dx) + np.abs(dy) <= r
    if name == "hexagon":
        return _poly_mask(xs, ys, _regular_poly(cx, cy, r, 6, 90.0))
    raise ValueError(f"unknown shape kind {name!r}")


def render_toy_item(config: ToyConfig, index: int) -> tuple[np.ndarray, int, int]:
    """Render one item deterministically from (config.seed, index).

    Returns (image, class_label, color_group). Items are laid out class-major:
    index // items_per_class is the class, and colors rotate round-robin
    within each class so every (class, color) cell gets an equal share.
    """
    n = config.shape_classes * config.items_per_class
    if not 0 <= index < n:
        raise ValueError(f"item index {index} outside [0, {n})")
    class_label = index // config.items_per_class
    within = index % config.items_per_class
    color_group = within % config.base_colors

    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _TAG_TOYGEN, index]))
    side = config.canvas
    cx = side * (0.5 + rng.uniform(-0.08, 0.08))
    cy = side * (0.5 + rng.uniform(-0.08, 0.08))
    r = side * rng.uniform(0.26, 0.36)

    mask = _shape_mask(SHAPE_NAMES[class_label], side, cx, cy, r)
    img = np.full((side, side, 3), 255, dtype=np.uint8)
    img[mask] = base_palette(config.base_colors)[color_group]
    return img, class_label, color_group


def generate_toy_catalog(config: ToyConfig, out_dir) -> Catalog:
    """Render the full corpus under out_dir/images and return its catalog.

    Deterministic: the same config yields byte-identical PNGs and an
    identical manifest ordering on every run.
    """
    out_dir = Path(out_dir)
    items = []
    for index in range(config.shape_classes * config.items_per_class):
        img, class_label, color_group = render_toy_item(config, index)
        rel = f"images/{index:06d}.png"
        save_png(out_dir / rel, img)
        items.append(
            CatalogItem(
                id=index,
                image_path=rel,
                class_label=class_label,
                instance_id=index,
                color_group=color_group,
                origin="original",
            )
        )
    return Catalog(items=items, class_count=config.shape_classes, root=out_dir)


def persist_catalog(catalog: Catalog, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{MANIFEST_MAGIC}\t{MANIFEST_VERSION}\tclass_count={catalog.class_count}"]
    for it in catalog.items:
        lines.append(
            f"{it.id}\t{it.image_path}\t{it.class_label}\t{it.instance_id}"
            f"\t{it.color_group}\t{it.origin}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class ManifestError(ValueError):
    pass


def load_catalog(path, *, require_images: bool = True) -> Catalog:
    """Parse a manifest; paths resolve relative to the manifest's directory.

    Malformed lines raise ManifestError naming the 1-based line number.
    Missing image files are reported here, not later at query time.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"manifest not found: {path}")
    root = path.parent
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ManifestError(f"{path}: empty manifest")

    head = lines[0].split("\t")
    if len(head) != 3 or head[0] != MANIFEST_MAGIC or head[1] != MANIFEST_VERSION:
        raise ManifestError(f"{path}:1: bad header {lines[0]!r}")
    try:
        key, val = head[2].split("=", 1)
        if key != "class_count":
            raise ValueError
        class_count = int(val)
    except ValueError:
        raise ManifestError(f"{path}:1: bad class_count field {head[2]!r}") from None

    items = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ManifestError(f"{path}:{lineno}: expected 6 tab-separated fields, got {len(parts)}")
        try:
            item = CatalogItem(
                id=int(parts[0]),
                image_path=parts[1],
                class_label=int(parts[2]),
                instance_id=int(parts[3]),
                color_group=int(parts[4]),
                origin=parts[5],
            )
        except ValueError as exc:
            raise ManifestError(f"{path}:{lineno}: {exc}") from None
        items.append(item)

    try:
        cat = Catalog(items=items, class_count=class_count, root=root)
    except ValueError as exc:
        raise ManifestError(f"{path}: {exc}") from None

    if require_images:
        missing = [it.id for it in items if not (root / it.image_path).is_file()]
        if missing:
            raise FileNotFoundError(
                f"{path}: {len(missing)} catalog image(s) missing, "
                f"first ids {missing[:10]}"
            )
    return cat


def filter_by_instances(catalog: Catalog, instance_ids) -> Catalog:
    keep = set(instance_ids)
    items = [it for it in catalog.items if it.instance_id in keep]
    return Catalog(items=items, class_count=catalog.class_count, root=catalog.root)


def split_train_eval(catalog: Catalog, eval_fraction: float, seed: int) -> tuple[Catalog, Catalog]:
    """Split by instance so variants of one rendered item never straddle sides."""
    check_fraction(eval_fraction, "eval_fraction")
    check_seed(seed)
    instances = np.array(catalog.instance_ids(), dtype=np.int64)
    if instances.size < 2:
        raise ValueError("need at least 2 instances to split")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 202]))
    perm = rng.permutation(instances)
    n_eval = int(round(eval_fraction * instances.size))
    n_eval = min(max(n_eval, 1), instances.size - 1)
    eval_set = set(perm[:n_eval].tolist())
    train_items = [it for it in catalog.items if it.instance_id not in eval_set]
    eval_items = [it for it in catalog.items if it.instance_id in eval_set]
    train = Catalog(items=train_items, class_count=catalog.class_count, root=catalog.root)
    evalc = Catalog(items=eval_items, class_count=catalog.class_count, root=catalog.root)
    return train, evalc


def derived_catalog(catalog: Catalog, items: list[CatalogItem]) -> Catalog:
    """New catalog over the same root (used by variant/sketch expansion)."""
    return Catalog(items=items, class_count=catalog.class_count, root=catalog.root)


def relabel(item: CatalogItem, **changes) -> CatalogItem:
    return replace(item, **changes)
