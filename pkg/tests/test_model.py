import numpy as np
import pytest

from sqnet.model import (
    CheckpointFormatError,
    ModelConfig,
    build_model,
    load_checkpoint,
    save_checkpoint,
)


def small_model(seed=0):
    return build_model(
        embed_dim=8, class_count=4, input_side=16, seed=seed, conv_channels=(4, 6), hidden=12
    )


class TestConstruction:
    def test_same_seed_same_parameters(self):
        a = small_model(seed=3)
        b = small_model(seed=3)
        for name in a.canonical_names():
            assert np.array_equal(a.params[name].data, b.params[name].data)

    def test_different_seed_differs(self):
        a = small_model(seed=3)
        b = small_model(seed=4)
        assert any(
            not np.array_equal(a.params[n].data, b.params[n].data)
            for n in a.canonical_names()
        )

    def test_parameter_count_stable(self):
        counts = {small_model(seed=s).parameter_count() for s in range(3)}
        assert len(counts) == 1
        assert counts.pop() > 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ModelConfig(embed_dim=0, class_count=4, input_side=16)
        with pytest.raises(ValueError):
            ModelConfig(embed_dim=8, class_count=4, input_side=15)  # not pool-divisible


class TestForward:
    def test_unit_norm_embeddings(self):
        model = small_model()
        rng = np.random.default_rng(0)
        batch = rng.random((5, 3, 16, 16))
        emb = model.embed_batch(batch, "photo")
        assert np.abs(np.linalg.norm(emb, axis=1) - 1.0).max() <= 1e-9

    def test_forward_deterministic(self):
        model = small_model()
        rng = np.random.default_rng(1)
        batch = rng.random((3, 3, 16, 16))
        a = model.embed_batch(batch, "photo")
        b = model.embed_batch(batch, "photo")
        assert np.array_equal(a, b)

    def test_batch_row_independence(self):
        model = small_model()
        rng = np.random.default_rng(2)
        batch = rng.random((8, 3, 16, 16))
        full = model.embed_batch(batch, "sketch")
        single = model.embed_batch(batch[4:5], "sketch")
        assert np.abs(full[4] - single[0]).max() < 1e-12

    def test_branches_disagree(self):
        model = small_model()
        rng = np.random.default_rng(3)
        batch = rng.random((2, 3, 16, 16))
        assert not np.array_equal(
            model.embed_batch(batch, "sketch"), model.embed_batch(batch, "photo")
        )

    def test_shared_head_touches_both_branches(self):
        model = small_model()
        rng = np.random.default_rng(4)
        batch = rng.random((2, 3, 16, 16))
        sk_before = model.embed_batch(batch, "sketch")
        ph_before = model.embed_batch(batch, "photo")
        model.params["head.fc1.w"].data += 0.05
        assert not np.array_equal(model.embed_batch(batch, "sketch"), sk_before)
        assert not np.array_equal(model.embed_batch(batch, "photo"), ph_before)

    def test_bad_branch_and_shape_rejected(self):
        model = small_model()
        with pytest.raises(ValueError, match="branch"):
            model.forward(np.zeros((1, 3, 16, 16)), "audio")
        with pytest.raises(ValueError, match="shape"):
            model.forward(np.zeros((1, 3, 8, 8)), "photo")


class TestTempHeads:
    def test_temp_head_added_and_dropped(self):
        model = small_model()
        names = model.add_temp_head("s1sk", seed=0)
        assert all(n in model.params for n in names)
        rng = np.random.default_rng(5)
        batch = rng.random((2, 3, 16, 16))
        emb, logits = model.forward(batch, "sketch", head_prefix="s1sk_head", cls_prefix="s1sk_cls")
        assert emb.data.shape == (2, 8)
        assert logits.data.shape == (2, 4)
        model.drop_params(names)
        assert all(n not in model.params for n in names)

    def test_temp_head_deterministic(self):
        m1, m2 = small_model(), small_model()
        n1 = m1.add_temp_head("aux", seed=9)
        n2 = m2.add_temp_head("aux", seed=9)
        assert n1 == n2
        for n in n1:
            assert np.array_equal(m1.params[n].data, m2.params[n].data)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        model = small_model(seed=7)
        path = tmp_path / "model.sqnm"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert loaded.config == model.config
        for n in model.canonical_names():
            assert np.array_equal(loaded.params[n].data, model.params[n].data)

    def test_save_is_deterministic(self, tmp_path):
        model = small_model(seed=7)
        p1, p2 = tmp_path / "a.sqnm", tmp_path / "b.sqnm"
        save_checkpoint(model, p1)
        save_checkpoint(model, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.sqnm"
        path.write_bytes(b"XXXX" + b"\x00" * 64)
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path)

    def test_truncated_rejected(self, tmp_path):
        model = small_model()
        path = tmp_path / "trunc.sqnm"
        save_checkpoint(model, path)
        path.write_bytes(path.read_bytes()[:-24])
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path)

    def test_load_values_shape_guard(self):
        model = small_model()
        with pytest.raises(ValueError, match="shape mismatch"):
            model.load_values({"cls.b": np.zeros(99)})
