"""Dual-branch encoder: per-domain conv stacks with a shared embedding head.

Sketch and photo batches route through their own convolution stack (weights
independent per branch), then through the SAME two fully connected layers to
an L2-normalized embedding; a shared classifier reads the normalized
embedding. Checkpoints serialize every named parameter as little-endian
float64 plus a JSON config block (magic "SQNM").
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff.tensor import (
    Tensor,
    conv2d,
    dense,
    l2_normalize_rows,
    maxpool2,
    relu,
    reshape,
)

BRANCHES = ("sketch", "photo")

CHECKPOINT_MAGIC = b"SQNM"
CHECKPOINT_VERSION = 1

_TAG_MODEL = 410


class CheckpointFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 32
    class_count: int = 8
    input_side: int = 32
    conv_channels: tuple[int, ...] = (8, 16, 32)
    hidden: int = 128

    def __post_init__(self):
        if self.embed_dim < 2:
            raise ValueError(f"embed_dim must be >= 2, got {self.embed_dim}")
        if self.class_count < 2:
            raise ValueError(f"class_count must be >= 2, got {self.class_count}")
        n = len(self.conv_channels)
        if not 2 <= n <= 3:
            raise ValueError(f"conv stack must have 2 or 3 blocks, got {n}")
        if self.input_side % (2**n) != 0 or self.input_side < 2 ** (n + 1):
            raise ValueError(
                f"input_side {self.input_side} must be a multiple of {2**n} and >= {2**(n+1)}"
            )
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))

    @property
    def feature_side(self) -> int:
        return self.input_side // (2 ** len(self.conv_channels))

    @property
    def flat_dim(self) -> int:
        return self.conv_channels[-1] * self.feature_side**2


def _he(rng, shape, fan_in):
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def _head_params(config: ModelConfig, rng, prefix: str) -> dict[str, Tensor]:
    p = {}
    p[f"{prefix}.fc1.w"] = Tensor(
        _he(rng, (config.flat_dim, config.hidden), config.flat_dim), requires_grad=True
    )
    p[f"{prefix}.fc1.b"] = Tensor(np.zeros(config.hidden), requires_grad=True)
    p[f"{prefix}.fc2.w"] = Tensor(
        _he(rng, (config.hidden, config.embed_dim), config.hidden), requires_grad=True
    )
    p[f"{prefix}.fc2.b"] = Tensor(np.zeros(config.embed_dim), requires_grad=True)
    return p


def _classifier_params(config: ModelConfig, rng, prefix: str) -> dict[str, Tensor]:
    return {
        f"{prefix}.w": Tensor(
            _he(rng, (config.embed_dim, config.class_count), config.embed_dim),
            requires_grad=True,
        ),
        f"{prefix}.b": Tensor(np.zeros(config.class_count), requires_grad=True),
    }


class DualBranchModel:
    def __init__(self, config: ModelConfig, params: dict[str, Tensor]):
        self.config = config
        self.params = params

    def canonical_names(self) -> list[str]:
        names = []
        for branch in BRANCHES:
            for i in range(1, len(self.config.conv_channels) + 1):
                names += [f"{branch}.conv{i}.w", f"{branch}.conv{i}.b"]
        names += ["head.fc1.w", "head.fc1.b", "head.fc2.w", "head.fc2.b", "cls.w", "cls.b"]
        return names

    def branch_names(self, branch: str) -> list[str]:
        return [n for n in self.canonical_names() if n.startswith(branch + ".")]

    def parameter_count(self) -> int:
        return sum(self.params[n].data.size for n in self.canonical_names())

    def subset(self, names) -> dict[str, Tensor]:
        return {n: self.params[n] for n in names}

    def forward(self, batch, branch: str, head_prefix: str = "head", cls_prefix: str = "cls"):
        """(embeddings, logits) for a (B, 3, side, side) batch in [0, 1]."""
        if branch not in BRANCHES:
            raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
        x = batch if isinstance(batch, Tensor) else Tensor(batch)
        side = self.config.input_side
        if x.data.ndim != 4 or x.data.shape[1:] != (3, side, side):
            raise ValueError(
                f"batch must have shape (B, 3, {side}, {side}), got {x.data.shape}"
            )
        p = self.params
        for i in range(1, len(self.config.conv_channels) + 1):
            x = maxpool2(relu(conv2d(x, p[f"{branch}.conv{i}.w"], p[f"{branch}.conv{i}.b"], pad=1)))
        x = reshape(x, (x.data.shape[0], self.config.flat_dim))
        h = relu(dense(x, p[f"{head_prefix}.fc1.w"], p[f"{head_prefix}.fc1.b"]))
        emb = l2_normalize_rows(dense(h, p[f"{head_prefix}.fc2.w"], p[f"{head_prefix}.fc2.b"]))
        logits = dense(emb, p[f"{cls_prefix}.w"], p[f"{cls_prefix}.b"])
        return emb, logits

    def embed_batch(self, batch: np.ndarray, branch: str) -> np.ndarray:
        emb, _ = self.forward(batch, branch)
        return emb.data

    def add_temp_head(self, prefix: str, seed: int) -> list[str]:
        """Private head+classifier params (stage-1 pretraining); returns names."""
        tag = zlib.crc32(prefix.encode("utf-8"))
        rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_MODEL, tag]))
        extra = _head_params(self.config, rng, f"{prefix}_head")
        extra.update(_classifier_params(self.config, rng, f"{prefix}_cls"))
        self.params.update(extra)
        return sorted(extra)

    def drop_params(self, names):
        for n in names:
            self.params.pop(n, None)

    def clone_values(self) -> dict[str, np.ndarray]:
        return {n: self.params[n].data.copy() for n in self.canonical_names()}

    def load_values(self, values: dict[str, np.ndarray]):
        for n, v in values.items():
            if n in self.params:
                if self.params[n].data.shape != v.shape:
                    raise ValueError(f"shape mismatch for {n}: {self.params[n].data.shape} vs {v.shape}")
                self.params[n].data = v.copy()


def build_model(
    embed_dim: int = 32,
    class_count: int = 8,
    input_side: int = 32,
    seed: int = 0,
    conv_channels: tuple[int, ...] = (8, 16, 32),
    hidden: int = 128,
) -> DualBranchModel:
    """Deterministic per seed: same seed, same parameter values."""
    config = ModelConfig(
        embed_dim=embed_dim,
        class_count=class_count,
        input_side=input_side,
        conv_channels=tuple(conv_channels),
        hidden=hidden,
    )
    rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_MODEL]))
    params: dict[str, Tensor] = {}
    for branch in BRANCHES:
        c_in = 3
        for i, c_out in enumerate(config.conv_channels, start=1):
            fan_in = c_in * 9
            params[f"{branch}.conv{i}.w"] = Tensor(
                _he(rng, (c_out, c_in, 3, 3), fan_in), requires_grad=True
            )
            params[f"{branch}.conv{i}.b"] = Tensor(np.zeros(c_out), requires_grad=True)
            c_in = c_out
    params.update(_head_params(config, rng, "head"))
    params.update(_classifier_params(config, rng, "cls"))
    return DualBranchModel(config, params)


def save_checkpoint(model: DualBranchModel, path) -> None:
    cfg = {
        "embed_dim": model.config.embed_dim,
        "class_count": model.config.class_count,
        "input_side": model.config.input_side,
        "conv_channels": list(model.config.conv_channels),
        "hidden": model.config.hidden,
    }
    blob = json.dumps(cfg, sort_keys=True).encode("utf-8")
    names = sorted(model.canonical_names())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            nb = name.encode("utf-8")
            arr = model.params[name].data
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f8").tobytes())


def load_checkpoint(path) -> DualBranchModel:
    path = Path(path)
    data = path.read_bytes()

    def need(n: int, off: int):
        if off + n > len(data):
            raise CheckpointFormatError(f"{path}: truncated at byte {off}")

    need(12, 0)
    if data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {data[:4]!r}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported version {version}")
    (blen,) = struct.unpack_from("<I", data, 8)
    need(blen + 4, 12)
    cfg = json.loads(data[12 : 12 + blen].decode("utf-8"))
    off = 12 + blen
    (count,) = struct.unpack_from("<I", data, off)
    off += 4

    model = build_model(
        embed_dim=cfg["embed_dim"],
        class_count=cfg["class_count"],
        input_side=cfg["input_side"],
        seed=0,
        conv_channels=tuple(cfg["conv_channels"]),
        hidden=cfg["hidden"],
    )
    expected = set(model.canonical_names())
    seen = set()
    for _ in range(count):
        need(4, off)
        (nlen,) = struct.unpack_from("<I", data, off)
        off += 4
        need(nlen + 4, off)
        name = data[off : off + nlen].decode("utf-8")
        off += nlen
        (ndim,) = struct.unpack_from("<I", data, off)
        off += 4
        need(4 * ndim, off)
        shape = struct.unpack_from(f"<{ndim}I", data, off)
        off += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        need(size * 8, off)
        arr = np.frombuffer(data, dtype="<f8", count=size, offset=off).reshape(shape)
        off += size * 8
        if name not in expected:
            raise CheckpointFormatError(f"{path}: unexpected tensor {name!r}")
        if model.params[name].data.shape != tuple(shape):
            raise CheckpointFormatError(
                f"{path}: tensor {name!r} has shape {tuple(shape)}, "
                f"architecture wants {model.params[name].data.shape}"
            )
        model.params[name].data = arr.astype(np.float64)
        seen.add(name)
    missing = expected - seen
    if missing:
        raise CheckpointFormatError(f"{path}: missing tensors {sorted(missing)[:5]}")
    return model
