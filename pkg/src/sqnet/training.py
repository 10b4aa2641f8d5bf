"""Three-stage training over the dual-branch encoder.

Stage 1 pretrains each branch as a classifier with a private throwaway head;
stage 2 trains everything jointly with cross-entropy plus a contrastive pull
between sketch/photo pairs; stage 3 trains on quadruplets with the scheduled
hinge weight and keeps the epoch with the best held-out quadruplet loss.

Every stochastic choice (shuffles, pair/quadruplet draws, augmentations)
derives from SeedSequence streams keyed by (seed, stage, epoch, ...), so a
fixed seed replays the exact trajectory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff.optim import Adam
from .autodiff.tensor import softmax_cross_entropy
from .catalog import Catalog
from .imaging.augment import AugmentConfig, augment
from .imaging.canvas import normalize_canvas
from .losses import (
    QuadrupletLossParams,
    beta_schedule,
    quadruplet_losses,
    stage2_objective,
    stage3_objective,
)
from .model import DualBranchModel
from .quadruplets import Quadruplet, QuadrupletSampler
from .raster import load_png

_TAG_STAGE = 510
_TAG_VALSET = 520

_ROLE_ANCHOR, _ROLE_POS, _ROLE_PN, _ROLE_NEG = 0, 1, 2, 3


@dataclass(frozen=True)
class StageConfig:
    stage: int
    epochs: int
    batch_size: int = 64
    lr: float = 1e-3
    beta_init: float = 2.0
    beta_increment: float = 0.5
    loss: QuadrupletLossParams = field(default_factory=QuadrupletLossParams)
    contrastive_margin: float = 1.0
    seed: int = 0
    augment: AugmentConfig | None = field(default_factory=AugmentConfig)

    def __post_init__(self):
        if self.stage not in (1, 2, 3):
            raise ValueError(f"stage must be 1, 2, or 3, got {self.stage}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.beta_init <= 0:
            raise ValueError(f"beta_init must be positive, got {self.beta_init}")


def default_stage_config(stage: int, seed: int = 0, **overrides) -> StageConfig:
    overrides.setdefault("epochs", {1: 10, 2: 10, 3: 25}[stage])
    return StageConfig(stage=stage, seed=seed, **overrides)


class ImageBank:
    """Canvas-normalized uint8 images for one catalog, cached in memory."""

    def __init__(self, catalog: Catalog, kind: str, side: int):
        self.kind = kind
        self.side = side
        self.images: dict[int, np.ndarray] = {}
        self.labels: dict[int, int] = {}
        for it in catalog.items:
            img = normalize_canvas(load_png(catalog.image_file(it)), kind, side)
            self.images[it.id] = img
            self.labels[it.id] = it.class_label
        self.ids = np.array(sorted(self.images), dtype=np.int64)

    def __len__(self):
        return len(self.images)

    def batch(
        self,
        ids,
        augment_cfg: AugmentConfig | None = None,
        key: tuple[int, ...] = (),
    ) -> np.ndarray:
        """(B, 3, side, side) float64 in [0, 1]; augmentation keyed per item."""
        rows = []
        for i in ids:
            img = self.images[int(i)]
            if augment_cfg is not None:
                img = augment(img, augment_cfg, item_key=(*key, int(i)))
            rows.append(img)
        arr = np.stack(rows).transpose(0, 3, 1, 2).astype(np.float64)
        arr /= 255.0
        return arr

    def label_array(self, ids) -> np.ndarray:
        return np.array([self.labels[int(i)] for i in ids], dtype=np.int64)


@dataclass
class TrainData:
    photo_catalog: Catalog
    sketch_catalog: Catalog
    photo_bank: ImageBank
    sketch_bank: ImageBank

    @classmethod
    def from_catalogs(cls, photo_catalog: Catalog, sketch_catalog: Catalog, side: int):
        return cls(
            photo_catalog=photo_catalog,
            sketch_catalog=sketch_catalog,
            photo_bank=ImageBank(photo_catalog, "photo", side),
            sketch_bank=ImageBank(sketch_catalog, "sketch", side),
        )


def _chunks(order: np.ndarray, size: int):
    for start in range(0, order.size, size):
        yield order[start : start + size]


def embed_ids(model: DualBranchModel, bank: ImageBank, ids, branch: str, batch_size: int = 256):
    """Clean (non-augmented) embeddings for the given ids, row per id."""
    ids = np.asarray(list(ids), dtype=np.int64)
    out = np.empty((ids.size, model.config.embed_dim), dtype=np.float64)
    for chunk in _chunks(np.arange(ids.size), batch_size):
        out[chunk] = model.embed_batch(bank.batch(ids[chunk]), branch)
    return out


def _train_accuracy(model, bank, branch, head_prefix, cls_prefix, batch_size=256) -> float:
    hits = 0
    for chunk in _chunks(np.arange(bank.ids.size), batch_size):
        ids = bank.ids[chunk]
        _, logits = model.forward(bank.batch(ids), branch, head_prefix, cls_prefix)
        hits += int((logits.data.argmax(axis=1) == bank.label_array(ids)).sum())
    return hits / bank.ids.size


def train_stage1(model: DualBranchModel, config: StageConfig, data: TrainData) -> list[dict]:
    """Per-branch classifier pretraining with temporary private heads."""
    history = []
    for branch_idx, (branch, bank) in enumerate(
        (("sketch", data.sketch_bank), ("photo", data.photo_bank))
    ):
        tmp = model.add_temp_head(branch, config.seed)
        head_prefix, cls_prefix = f"{branch}_head", f"{branch}_cls"
        opt = Adam(
            {**model.subset(model.branch_names(branch)), **{n: model.params[n] for n in tmp}},
            lr=config.lr,
        )
        rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, _TAG_STAGE, 1, branch_idx])
        )
        for epoch in range(config.epochs):
            order = rng.permutation(bank.ids)
            losses = []
            for ids in _chunks(order, config.batch_size):
                batch = bank.batch(ids, config.augment, key=(1, epoch, branch_idx))
                _, logits = model.forward(batch, branch, head_prefix, cls_prefix)
                loss = softmax_cross_entropy(logits, bank.label_array(ids))
                opt.check_finite_loss(loss.item(), f"stage 1 {branch} epoch {epoch}")
                opt.zero_grad()
                loss.backward()
                opt.step()
                losses.append(loss.item())
            history.append(
                {
                    "stage": 1,
                    "branch": branch,
                    "epoch": epoch,
                    "loss": float(np.mean(losses)),
                }
            )
        history.append(
            {
                "stage": 1,
                "branch": branch,
                "train_accuracy": _train_accuracy(model, bank, branch, head_prefix, cls_prefix),
            }
        )
        model.drop_params(tmp)
    return history


def train_stage2(model: DualBranchModel, config: StageConfig, data: TrainData) -> list[dict]:
    """Joint CE + contrastive training of both branches and the shared head."""
    opt = Adam(model.subset(model.canonical_names()), lr=config.lr)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _TAG_STAGE, 2]))
    sk_bank, ph_bank = data.sketch_bank, data.photo_bank

    classes = sorted({it.class_label for it in data.photo_catalog.items})
    by_class = {
        c: np.array(
            sorted(it.id for it in data.photo_catalog.items if it.class_label == c), np.int64
        )
        for c in classes
    }
    not_class = {
        c: np.concatenate([by_class[o] for o in classes if o != c]) for c in classes
    }
    if len(classes) < 2:
        raise ValueError("stage 2 pairing needs at least 2 classes")

    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(sk_bank.ids)
        losses, terms_acc = [], []
        for sk_ids in _chunks(order, config.batch_size):
            same = rng.random(sk_ids.size) < 0.5
            ph_ids = np.empty(sk_ids.size, dtype=np.int64)
            for j, (sid, s) in enumerate(zip(sk_ids, same)):
                cls = sk_bank.labels[int(sid)]
                pool = by_class[cls] if s else not_class[cls]
                ph_ids[j] = pool[rng.integers(pool.size)]
            sk_batch = sk_bank.batch(sk_ids, config.augment, key=(2, epoch, 0))
            ph_batch = ph_bank.batch(ph_ids, config.augment, key=(2, epoch, 1))
            sk_out = model.forward(sk_batch, "sketch")
            ph_out = model.forward(ph_batch, "photo")
            loss, terms = stage2_objective(
                sk_out,
                ph_out,
                sk_bank.label_array(sk_ids),
                ph_bank.label_array(ph_ids),
                same,
                beta=config.beta_init,
                margin=config.contrastive_margin,
            )
            opt.check_finite_loss(loss.item(), f"stage 2 epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(loss.item())
            terms_acc.append(terms)
        history.append(
            {
                "stage": 2,
                "epoch": epoch,
                "loss": float(np.mean(losses)),
                "beta": config.beta_init,
                "ce_sketch": float(np.mean([t["ce_sketch"] for t in terms_acc])),
                "ce_photo": float(np.mean([t["ce_photo"] for t in terms_acc])),
                "contrastive": float(np.mean([t["contrastive"] for t in terms_acc])),
            }
        )
    return history


def sample_validation_quadruplets(
    val_photo_catalog: Catalog, seed: int, count: int | None = None
) -> list[Quadruplet]:
    """Fixed held-out quadruplet set: one per eval photo item (or `count` of them)."""
    sampler = QuadrupletSampler(val_photo_catalog)
    rng = np.random.default_rng(np.random.SeedSequence([seed, _TAG_VALSET]))
    ids = sorted(it.id for it in val_photo_catalog.items)
    if count is not None and count < len(ids):
        pick = rng.choice(len(ids), size=count, replace=False)
        ids = [ids[i] for i in sorted(pick)]
    return [sampler.sample(i, rng) for i in ids]


def quadruplet_distances(
    model: DualBranchModel,
    quads: list[Quadruplet],
    sketch_bank: ImageBank,
    photo_bank: ImageBank,
    batch_size: int = 256,
) -> np.ndarray:
    """(n, 3) array of (d_pos, d_pn, d_neg) on clean images."""
    sk_ids = sorted({q.anchor_sketch for q in quads})
    ph_ids = sorted({i for q in quads for i in (q.positive, q.positive_negative, q.negative)})
    sk_emb = dict(zip(sk_ids, embed_ids(model, sketch_bank, sk_ids, "sketch", batch_size)))
    ph_emb = dict(zip(ph_ids, embed_ids(model, photo_bank, ph_ids, "photo", batch_size)))
    out = np.empty((len(quads), 3), dtype=np.float64)
    for i, q in enumerate(quads):
        a = sk_emb[q.anchor_sketch]
        out[i, 0] = np.linalg.norm(a - ph_emb[q.positive])
        out[i, 1] = np.linalg.norm(a - ph_emb[q.positive_negative])
        out[i, 2] = np.linalg.norm(a - ph_emb[q.negative])
    return out


def validation_quadruplet_loss(
    model, quads, sketch_bank, photo_bank, params: QuadrupletLossParams
) -> float:
    d = quadruplet_distances(model, quads, sketch_bank, photo_bank)
    total = 0.0
    for d_pos, d_pn, d_neg in d:
        l1, l2 = quadruplet_losses(d_pos, d_pn, d_neg, params)
        total += l1 + l2
    return total / len(quads)


def chain_rate(distances: np.ndarray) -> float:
    """Fraction of rows with d_pos < d_pn < d_neg."""
    return float(((distances[:, 0] < distances[:, 1]) & (distances[:, 1] < distances[:, 2])).mean())


def pos_neg_rate(distances: np.ndarray) -> float:
    return float((distances[:, 0] < distances[:, 2]).mean())


def train_stage3(
    model: DualBranchModel,
    config: StageConfig,
    data: TrainData,
    val_quads: list[Quadruplet],
    val_data: TrainData | None = None,
) -> list[dict]:
    """Quadruplet training; restores the best-validation epoch into `model`."""
    opt = Adam(model.subset(model.canonical_names()), lr=config.lr)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, _TAG_STAGE, 3]))
    sampler = QuadrupletSampler(data.photo_catalog)
    sk_bank, ph_bank = data.sketch_bank, data.photo_bank
    vd = val_data if val_data is not None else data

    history = []
    best_loss = np.inf
    best_values = None
    best_epoch = -1
    for epoch in range(config.epochs):
        beta = beta_schedule(epoch, config.beta_init, config.beta_increment)
        order = rng.permutation(sk_bank.ids)
        losses, terms_acc = [], []
        for anchor_ids in _chunks(order, config.batch_size):
            quads = [sampler.sample(int(i), rng) for i in anchor_ids]
            pos_ids = [q.positive for q in quads]
            pn_ids = [q.positive_negative for q in quads]
            neg_ids = [q.negative for q in quads]
            a_batch = sk_bank.batch(anchor_ids, config.augment, key=(3, epoch, _ROLE_ANCHOR))
            p_batch = ph_bank.batch(pos_ids, config.augment, key=(3, epoch, _ROLE_POS))
            pn_batch = ph_bank.batch(pn_ids, config.augment, key=(3, epoch, _ROLE_PN))
            n_batch = ph_bank.batch(neg_ids, config.augment, key=(3, epoch, _ROLE_NEG))
            outs = (
                model.forward(a_batch, "sketch"),
                model.forward(p_batch, "photo"),
                model.forward(pn_batch, "photo"),
                model.forward(n_batch, "photo"),
            )
            labels = (
                sk_bank.label_array(anchor_ids),
                ph_bank.label_array(pos_ids),
                ph_bank.label_array(pn_ids),
                ph_bank.label_array(neg_ids),
            )
            loss, terms = stage3_objective(*outs, labels, config.loss, beta)
            opt.check_finite_loss(loss.item(), f"stage 3 epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(loss.item())
            terms_acc.append(terms)
        val_loss = validation_quadruplet_loss(model, val_quads, vd.sketch_bank, vd.photo_bank, config.loss)
        row = {
            "stage": 3,
            "epoch": epoch,
            "beta": beta,
            "loss": float(np.mean(losses)),
            "loss1": float(np.mean([t["loss1"] for t in terms_acc])),
            "loss2": float(np.mean([t["loss2"] for t in terms_acc])),
            "val_loss": val_loss,
        }
        history.append(row)
        if val_loss < best_loss:
            best_loss = val_loss
            best_values = model.clone_values()
            best_epoch = epoch
    if best_values is not None:
        model.load_values(best_values)
    history.append({"stage": 3, "best_epoch": best_epoch, "best_val_loss": best_loss})
    return history


def train_stage(
    model: DualBranchModel,
    config: StageConfig,
    data: TrainData,
    val_quads: list[Quadruplet] | None = None,
    val_data: TrainData | None = None,
) -> list[dict]:
    if config.stage == 1:
        return train_stage1(model, config, data)
    if config.stage == 2:
        return train_stage2(model, config, data)
    if val_quads is None:
        raise ValueError("stage 3 needs a validation quadruplet set")
    return train_stage3(model, config, data, val_quads, val_data)


def write_history(path, rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
