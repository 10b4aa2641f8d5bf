import numpy as np
import pytest

from sqnet.catalog import Catalog, CatalogItem
from sqnet.quadruplets import (
    Quadruplet,
    QuadrupletSampler,
    QuadrupletSamplingError,
    form_quadruplet,
)


def _item(id, cls, inst, color, origin="original"):
    return CatalogItem(
        id=id,
        image_path=f"img/{id}.png",
        class_label=cls,
        instance_id=inst,
        color_group=color,
        origin=origin,
    )


def _variant_catalog(classes=3, instances_per_class=2, colors=3):
    """Every instance appears once per color group."""
    items, next_id, next_inst = [], 0, 0
    for cls in range(classes):
        for _ in range(instances_per_class):
            for color in range(colors):
                origin = "original" if color == 0 else "hue_variant"
                items.append(_item(next_id, cls, next_inst, color, origin))
                next_id += 1
            next_inst += 1
    return Catalog(items=items, class_count=classes)


class TestFormQuadruplet:
    def test_invariants_hold_over_many_draws(self):
        catalog = _variant_catalog()
        by_id = catalog.by_id()
        rng = np.random.default_rng(3)
        for _ in range(1000):
            pos_id = int(rng.choice([it.id for it in catalog.items]))
            quad = form_quadruplet(catalog, pos_id, rng)
            pos, pn, neg = by_id[quad.positive], by_id[quad.positive_negative], by_id[quad.negative]
            assert quad.anchor_sketch == quad.positive == pos_id
            assert pn.instance_id == pos.instance_id
            assert pn.color_group != pos.color_group
            assert pn.id != pos.id
            assert neg.class_label != pos.class_label

    def test_accepts_item_object(self):
        catalog = _variant_catalog()
        rng = np.random.default_rng(4)
        item = catalog.items[0]
        quad = form_quadruplet(catalog, item, rng)
        assert quad.positive == item.id

    def test_forced_sibling(self):
        # instance 0 has exactly one other color variant, so pn is determined
        items = [
            _item(0, 0, 0, 0),
            _item(1, 0, 0, 1, origin="hue_variant"),
            _item(2, 1, 1, 0),
            _item(3, 1, 1, 1, origin="hue_variant"),
        ]
        catalog = Catalog(items=items, class_count=2)
        rng = np.random.default_rng(5)
        for _ in range(20):
            assert form_quadruplet(catalog, 0, rng).positive_negative == 1

    def test_two_class_negative_complement(self):
        catalog = _variant_catalog(classes=2, instances_per_class=2, colors=2)
        by_id = catalog.by_id()
        class_of = {it.id: it.class_label for it in catalog.items}
        rng = np.random.default_rng(6)
        seen = set()
        for _ in range(500):
            quad = form_quadruplet(catalog, 0, rng)
            assert class_of[quad.negative] != by_id[0].class_label
            seen.add(quad.negative)
        # every other-class item eventually drawn
        expected = {it.id for it in catalog.items if it.class_label != by_id[0].class_label}
        assert seen == expected

    def test_unknown_id(self):
        catalog = _variant_catalog()
        with pytest.raises(QuadrupletSamplingError, match="not in catalog"):
            form_quadruplet(catalog, 10_000, np.random.default_rng(0))

    def test_no_color_sibling(self):
        items = [
            _item(0, 0, 0, 0),
            _item(1, 0, 0, 0),  # same instance but same color group
            _item(2, 1, 1, 0),
        ]
        catalog = Catalog(items=items, class_count=2)
        with pytest.raises(QuadrupletSamplingError, match="color_group"):
            form_quadruplet(catalog, 0, np.random.default_rng(0))

    def test_single_class(self):
        items = [
            _item(0, 0, 0, 0),
            _item(1, 0, 0, 1, origin="hue_variant"),
        ]
        catalog = Catalog(items=items, class_count=1)
        with pytest.raises(QuadrupletSamplingError, match="single class"):
            form_quadruplet(catalog, 0, np.random.default_rng(0))

    def test_deterministic_given_rng_state(self):
        catalog = _variant_catalog()
        draws1 = [
            form_quadruplet(catalog, 0, np.random.default_rng(77)).as_tuple() for _ in range(1)
        ]
        seq1 = [form_quadruplet(catalog, i % 6, np.random.default_rng(i)).as_tuple() for i in range(30)]
        seq2 = [form_quadruplet(catalog, i % 6, np.random.default_rng(i)).as_tuple() for i in range(30)]
        assert seq1 == seq2
        assert draws1[0] == form_quadruplet(catalog, 0, np.random.default_rng(77)).as_tuple()


class TestSampler:
    def test_same_invariants_as_direct_form(self):
        catalog = _variant_catalog(classes=4, instances_per_class=3, colors=3)
        sampler = QuadrupletSampler(catalog)
        by_id = catalog.by_id()
        rng = np.random.default_rng(9)
        for _ in range(1000):
            pos_id = int(rng.choice([it.id for it in catalog.items]))
            quad = sampler.sample(pos_id, rng)
            pos, pn, neg = by_id[quad.positive], by_id[quad.positive_negative], by_id[quad.negative]
            assert quad.anchor_sketch == pos_id
            assert pn.instance_id == pos.instance_id and pn.color_group != pos.color_group
            assert neg.class_label != pos.class_label

    def test_sibling_choice_roughly_uniform(self):
        catalog = _variant_catalog(classes=2, instances_per_class=1, colors=5)
        sampler = QuadrupletSampler(catalog)
        rng = np.random.default_rng(10)
        counts = {}
        n = 4000
        for _ in range(n):
            pn = sampler.sample(0, rng).positive_negative
            counts[pn] = counts.get(pn, 0) + 1
        assert set(counts) == {1, 2, 3, 4}
        for c in counts.values():
            assert abs(c - n / 4) < 0.15 * n / 4 + 3 * np.sqrt(n / 4)

    def test_matches_form_quadruplet_support(self):
        catalog = _variant_catalog()
        sampler = QuadrupletSampler(catalog)
        rng = np.random.default_rng(11)
        direct = {form_quadruplet(catalog, 2, rng).as_tuple() for _ in range(400)}
        rng = np.random.default_rng(12)
        indexed = {sampler.sample(2, rng).as_tuple() for _ in range(400)}
        assert direct == indexed

    def test_error_cases(self):
        items = [
            _item(0, 0, 0, 0),
            _item(1, 0, 0, 1, origin="hue_variant"),
            _item(2, 0, 1, 0),
            _item(3, 1, 2, 0),
            _item(4, 1, 2, 1, origin="hue_variant"),
        ]
        sampler = QuadrupletSampler(Catalog(items=items, class_count=2))
        rng = np.random.default_rng(0)
        with pytest.raises(QuadrupletSamplingError, match="not in catalog"):
            sampler.sample(99, rng)
        with pytest.raises(QuadrupletSamplingError, match="color_group"):
            sampler.sample(2, rng)  # instance 1 has a single rendition

    def test_single_class_catalog(self):
        items = [_item(0, 0, 0, 0), _item(1, 0, 0, 1, origin="hue_variant")]
        sampler = QuadrupletSampler(Catalog(items=items, class_count=1))
        with pytest.raises(QuadrupletSamplingError, match="single class"):
            sampler.sample(0, np.random.default_rng(0))


class TestQuadrupletRecord:
    def test_as_tuple_order(self):
        quad = Quadruplet(anchor_sketch=7, positive=7, positive_negative=9, negative=30)
        assert quad.as_tuple() == (7, 7, 9, 30)
