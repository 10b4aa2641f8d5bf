"""Embedding index over a photo catalog, with optional baseline features.

Embeddings are computed with the photo branch, rounded through float32 (the
on-disk precision) before they enter the in-memory matrix, so searching a
freshly built index and searching a reloaded one give identical results.
Unreadable images are skipped with a warning and recorded.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import Catalog
from .features.histograms import ColorHistogram, grid_color_histogram, stroke_color_histogram
from .features.store import load_histograms, save_histograms
from .features.tfidf import CorpusColorIndex, build_color_corpus_index
from .imaging.canvas import normalize_canvas
from .model import DualBranchModel
from .raster import load_png
from .validation import check_unit_rows

EMBED_MAGIC = b"SQNE"
EMBED_VERSION = 1


class IndexFormatError(ValueError):
    pass


@dataclass
class BaselineFeatures:
    shape_embeddings: np.ndarray  # (n, d) shape-space embeddings (pre-hinge model)
    grid_counts: np.ndarray  # (n, 500) raw grid histogram counts
    stroke_counts: np.ndarray  # (n, 125) raw non-background counts
    corpus: CorpusColorIndex

    def grid_histogram(self, row: int) -> ColorHistogram:
        return ColorHistogram(self.grid_counts[row], layout="grid2x2", normalization="l1")


@dataclass
class EmbeddingIndex:
    ids: np.ndarray  # (n,) int64, unique
    embeddings: np.ndarray  # (n, d) float64 holding float32-rounded values
    class_labels: np.ndarray  # (n,) int64
    baseline: BaselineFeatures | None = None
    skipped: tuple[int, ...] = ()

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.embeddings = np.asarray(self.embeddings, dtype=np.float64)
        self.class_labels = np.asarray(self.class_labels, dtype=np.int64)
        if self.ids.size != len(set(self.ids.tolist())):
            raise ValueError("index ids must be unique")
        if self.embeddings.shape[0] != self.ids.size or self.class_labels.size != self.ids.size:
            raise ValueError("ids, embeddings, and class_labels must align")
        if self.ids.size:
            check_unit_rows(self.embeddings, "index embeddings", tol=1e-6)

    def __len__(self):
        return int(self.ids.size)

    @property
    def embed_dim(self) -> int:
        return int(self.embeddings.shape[1]) if self.embeddings.ndim == 2 else 0

    def row_of(self, item_id: int) -> int:
        hits = np.where(self.ids == item_id)[0]
        if not hits.size:
            raise KeyError(f"item id {item_id} not in index")
        return int(hits[0])


def _f32_round(mat: np.ndarray) -> np.ndarray:
    return mat.astype(np.float32).astype(np.float64)


def build_index(
    catalog: Catalog,
    embedder: DualBranchModel,
    with_baselines: bool = False,
    baseline_embedder: DualBranchModel | None = None,
    batch_size: int = 256,
) -> EmbeddingIndex:
    """Embed every readable photo item; optionally attach baseline features.

    Histograms are computed on the raw stored image; embeddings on the
    canvas-normalized one. baseline_embedder defaults to `embedder`, but the
    intended use hands in the shape-only (pre-hinge) checkpoint.
    """
    side = embedder.config.input_side
    ids, labels, images, raws = [], [], [], []
    skipped = []
    for it in catalog.items:
        try:
            raw = load_png(catalog.image_file(it))
        except (OSError, ValueError) as exc:
            warnings.warn(f"skipping unreadable item {it.id}: {exc}")
            skipped.append(it.id)
            continue
        ids.append(it.id)
        labels.append(it.class_label)
        raws.append(raw)
        images.append(normalize_canvas(raw, "photo", side))

    n = len(ids)
    dim = embedder.config.embed_dim
    emb = np.empty((n, dim), dtype=np.float64)
    for start in range(0, n, batch_size):
        chunk = images[start : start + batch_size]
        batch = np.stack(chunk).transpose(0, 3, 1, 2).astype(np.float64) / 255.0
        emb[start : start + len(chunk)] = embedder.embed_batch(batch, "photo")
    emb = _f32_round(emb)

    baseline = None
    if with_baselines and n:
        shaper = baseline_embedder if baseline_embedder is not None else embedder
        sdim = shaper.config.embed_dim
        sside = shaper.config.input_side
        semb = np.empty((n, sdim), dtype=np.float64)
        for start in range(0, n, batch_size):
            chunk = raws[start : start + batch_size]
            batch = (
                np.stack([normalize_canvas(r, "photo", sside) for r in chunk])
                .transpose(0, 3, 1, 2)
                .astype(np.float64)
                / 255.0
            )
            semb[start : start + len(chunk)] = shaper.embed_batch(batch, "photo")
        semb = _f32_round(semb)
        grid = np.stack([grid_color_histogram(r).counts for r in raws])
        stroke_hists = [stroke_color_histogram(r) for r in raws]
        stroke = np.stack([h.counts for h in stroke_hists])
        corpus = build_color_corpus_index(stroke_hists)
        baseline = BaselineFeatures(
            shape_embeddings=semb, grid_counts=grid, stroke_counts=stroke, corpus=corpus
        )

    return EmbeddingIndex(
        ids=np.array(ids, dtype=np.int64),
        embeddings=emb if n else np.zeros((0, dim)),
        class_labels=np.array(labels, dtype=np.int64),
        baseline=baseline,
        skipped=tuple(skipped),
    )


def save_embeddings(path, ids: np.ndarray, embeddings: np.ndarray) -> None:
    """SQNE store: f32 little-endian records keyed by u64 id."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, dim = embeddings.shape
    with open(path, "wb") as fh:
        fh.write(EMBED_MAGIC)
        fh.write(struct.pack("<IIQ", EMBED_VERSION, dim, n))
        f32 = embeddings.astype("<f4")
        for i in range(n):
            fh.write(struct.pack("<Q", int(ids[i])))
            fh.write(f32[i].tobytes())


def load_embeddings(path) -> tuple[np.ndarray, np.ndarray]:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != EMBED_MAGIC:
        raise IndexFormatError(f"{path}: bad magic {data[:4]!r}")
    version, dim, count = struct.unpack_from("<IIQ", data, 4)
    if version != EMBED_VERSION:
        raise IndexFormatError(f"{path}: unsupported version {version}")
    rec = 8 + dim * 4
    if len(data) != 20 + count * rec:
        raise IndexFormatError(f"{path}: truncated or padded file")
    ids = np.empty(count, dtype=np.int64)
    emb = np.empty((count, dim), dtype=np.float64)
    off = 20
    for i in range(count):
        (ids[i],) = struct.unpack_from("<Q", data, off)
        emb[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=off + 8)
        off += rec
    return ids, emb


def save_index(index: EmbeddingIndex, out_dir) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_embeddings(out_dir / "embeddings.sqne", index.ids, index.embeddings)
    meta = {
        "embed_dim": index.embed_dim,
        "count": len(index),
        "skipped": list(index.skipped),
        "has_baselines": index.baseline is not None,
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    lines = [f"{int(i)}\t{int(c)}" for i, c in zip(index.ids, index.class_labels)]
    (out_dir / "labels.tsv").write_text("\n".join(lines) + ("\n" if lines else ""))
    if index.baseline is not None:
        b = index.baseline
        save_embeddings(out_dir / "shape.sqne", index.ids, b.shape_embeddings)
        save_histograms(
            out_dir / "grid.sqch",
            index.ids,
            [ColorHistogram(c, "grid2x2", "l1") for c in b.grid_counts],
        )
        save_histograms(
            out_dir / "stroke.sqch",
            index.ids,
            [ColorHistogram(c, "single", "raw_counts") for c in b.stroke_counts],
        )
        corpus = {"n_images": b.corpus.n_images, "doc_freq": b.corpus.doc_freq.tolist()}
        (out_dir / "corpus.json").write_text(json.dumps(corpus, sort_keys=True) + "\n")


def load_index(out_dir) -> EmbeddingIndex:
    out_dir = Path(out_dir)
    meta = json.loads((out_dir / "meta.json").read_text())
    ids, emb = load_embeddings(out_dir / "embeddings.sqne")
    labels_txt = (out_dir / "labels.tsv").read_text().splitlines()
    label_map = {}
    for line in labels_txt:
        if line.strip():
            i, c = line.split("\t")
            label_map[int(i)] = int(c)
    labels = np.array([label_map[int(i)] for i in ids], dtype=np.int64)
    baseline = None
    if meta.get("has_baselines"):
        sids, semb = load_embeddings(out_dir / "shape.sqne")
        if not np.array_equal(sids, ids):
            raise IndexFormatError(f"{out_dir}: shape store ids disagree with embeddings")
        gids, ghists = load_histograms(out_dir / "grid.sqch")
        kids, khists = load_histograms(out_dir / "stroke.sqch")
        if not (np.array_equal(gids, ids) and np.array_equal(kids, ids)):
            raise IndexFormatError(f"{out_dir}: histogram store ids disagree with embeddings")
        corpus_raw = json.loads((out_dir / "corpus.json").read_text())
        corpus = CorpusColorIndex(
            n_images=corpus_raw["n_images"],
            doc_freq=np.array(corpus_raw["doc_freq"], dtype=np.int64),
        )
        baseline = BaselineFeatures(
            shape_embeddings=semb,
            grid_counts=np.stack([h.counts for h in ghists]) if len(ghists) else np.zeros((0, 500)),
            stroke_counts=np.stack([h.counts for h in khists]) if len(khists) else np.zeros((0, 125)),
            corpus=corpus,
        )
    return EmbeddingIndex(
        ids=ids,
        embeddings=emb,
        class_labels=labels,
        baseline=baseline,
        skipped=tuple(meta.get("skipped", [])),
    )
