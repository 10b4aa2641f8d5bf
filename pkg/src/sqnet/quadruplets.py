"""Quadruplet formation over a variant-expanded catalog.

A quadruplet anchors a synthesized sketch against three photos: the photo it
was sketched from, a different-color rendition of the same instance, and a
random item of another class. Sketch items share ids with their source
photos, so the anchor id equals the positive id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Catalog, CatalogItem


class QuadrupletSamplingError(ValueError):
    pass


@dataclass(frozen=True)
class Quadruplet:
    anchor_sketch: int  # sketch item id (== positive id by construction)
    positive: int
    positive_negative: int  # same instance, different color_group
    negative: int  # different class

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.anchor_sketch, self.positive, self.positive_negative, self.negative)


def form_quadruplet(catalog: Catalog, positive_item, rng: np.random.Generator) -> Quadruplet:
    """Sample p+- uniformly among same-instance color siblings and p- uniformly
    over different-class items. positive_item may be an id or a CatalogItem."""
    if isinstance(positive_item, CatalogItem):
        pos = positive_item
    else:
        try:
            pos = catalog.by_id()[int(positive_item)]
        except KeyError:
            raise QuadrupletSamplingError(f"item id {positive_item} not in catalog") from None

    siblings = [
        it.id
        for it in catalog.items
        if it.instance_id == pos.instance_id
        and it.color_group != pos.color_group
        and it.id != pos.id
    ]
    if not siblings:
        raise QuadrupletSamplingError(
            f"instance {pos.instance_id} has no same-instance item with a "
            f"different color_group (item {pos.id})"
        )
    others = [it.id for it in catalog.items if it.class_label != pos.class_label]
    if not others:
        raise QuadrupletSamplingError(
            f"catalog has a single class ({pos.class_label}); cannot draw a negative"
        )
    pn = siblings[int(rng.integers(len(siblings)))]
    neg = others[int(rng.integers(len(others)))]
    return Quadruplet(anchor_sketch=pos.id, positive=pos.id, positive_negative=pn, negative=neg)


class QuadrupletSampler:
    """Precomputed index over a catalog for fast repeated sampling."""

    def __init__(self, catalog: Catalog):
        self.by_id = catalog.by_id()
        self.class_count = catalog.class_count
        self._siblings: dict[int, np.ndarray] = {}
        self._non_class: dict[int, np.ndarray] = {}

        by_instance: dict[int, list[CatalogItem]] = {}
        for it in catalog.items:
            by_instance.setdefault(it.instance_id, []).append(it)
        for its in by_instance.values():
            for it in its:
                sib = [o.id for o in its if o.color_group != it.color_group and o.id != it.id]
                self._siblings[it.id] = np.array(sorted(sib), dtype=np.int64)

        classes = sorted({it.class_label for it in catalog.items})
        ids_by_class = {
            c: np.array(sorted(it.id for it in catalog.items if it.class_label == c), np.int64)
            for c in classes
        }
        for c in classes:
            others = [ids_by_class[o] for o in classes if o != c]
            self._non_class[c] = (
                np.concatenate(others) if others else np.empty(0, dtype=np.int64)
            )

    def sample(self, positive_id: int, rng: np.random.Generator) -> Quadruplet:
        pos = self.by_id.get(int(positive_id))
        if pos is None:
            raise QuadrupletSamplingError(f"item id {positive_id} not in catalog")
        sib = self._siblings[pos.id]
        if sib.size == 0:
            raise QuadrupletSamplingError(
                f"instance {pos.instance_id} has no same-instance item with a "
                f"different color_group (item {pos.id})"
            )
        others = self._non_class[pos.class_label]
        if others.size == 0:
            raise QuadrupletSamplingError(
                f"catalog has a single class ({pos.class_label}); cannot draw a negative"
            )
        pn = int(sib[rng.integers(sib.size)])
        neg = int(others[rng.integers(others.size)])
        return Quadruplet(pos.id, pos.id, pn, neg)
