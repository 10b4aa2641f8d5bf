"""Scripted end-to-end run: data generation, training, indexing, evaluation.

Every artifact lands under one root with fixed names and no timestamps, so a
re-run with the same seed reproduces the tree byte for byte:

    root/
      data/            images/, sketches/, photos.tsv, sketches.tsv
      models/          stage1.sqnm stage2.sqnm stage3.sqnm + history_*.jsonl
      index/           embeddings.sqne, baselines, meta.json
      reports/         eval_*.json, summary.json
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .catalog import Catalog, ToyConfig, filter_by_instances, generate_toy_catalog, persist_catalog, split_train_eval
from .corpus import expand_with_variants, synthesize_sketch_catalog
from .features.histograms import grid_color_histogram, stroke_color_histogram
from .imaging.sketch import SketchSynthParams
from .index import EmbeddingIndex, build_index, save_index
from .losses import QuadrupletLossParams
from .metrics import EvalReport, evaluate_ranking
from .model import DualBranchModel, build_model, load_checkpoint, save_checkpoint
from .raster import load_png
from .search import (
    baseline1_components,
    baseline2_components,
    euclidean_matrix,
    fused_distance,
    fused_similarity_geometric,
    order_rows,
)
from .training import (
    TrainData,
    chain_rate,
    default_stage_config,
    embed_ids,
    pos_neg_rate,
    quadruplet_distances,
    sample_validation_quadruplets,
    train_stage1,
    train_stage2,
    train_stage3,
    write_history,
)


@dataclass(frozen=True)
class PipelineConfig:
    shape_classes: int = 8
    base_colors: int = 5
    items_per_class: int = 100
    canvas_side: int = 64
    eval_fraction: float = 0.2
    embed_dim: int = 32
    input_side: int = 24
    conv_channels: tuple[int, ...] = (8, 16, 32)
    hidden: int = 128
    stage_epochs: tuple[int, int, int] = (10, 10, 25)
    batch_size: int = 64
    lr: float = 1e-3
    lam: float = 1.5
    alpha: float = 0.1
    val_quad_count: int | None = 512
    gamma_default: float = 0.5
    omega_default: float = 0.5
    seed: int = 0

    def loss_params(self, alpha: float | None = None) -> QuadrupletLossParams:
        return QuadrupletLossParams(lam=self.lam, alpha=self.alpha if alpha is None else alpha)


def small_config(**overrides) -> PipelineConfig:
    """Reduced scale for fast end-to-end runs (determinism checks, smoke tests)."""
    base = dict(
        shape_classes=3,
        base_colors=3,
        items_per_class=6,
        canvas_side=48,
        stage_epochs=(2, 2, 3),
        batch_size=16,
        val_quad_count=None,
    )
    base.update(overrides)
    return PipelineConfig(**base)


def prepare_data(config: PipelineConfig, root) -> tuple[Catalog, Catalog]:
    """Generate toy photos, their color renditions, and one sketch per photo."""
    data_dir = Path(root) / "data"
    toy = generate_toy_catalog(
        ToyConfig(
            shape_classes=config.shape_classes,
            base_colors=config.base_colors,
            items_per_class=config.items_per_class,
            canvas=config.canvas_side,
            seed=config.seed,
        ),
        data_dir,
    )
    photos = expand_with_variants(toy)
    persist_catalog(photos, data_dir / "photos.tsv")
    sketches = synthesize_sketch_catalog(photos, SketchSynthParams(seed=config.seed))
    persist_catalog(sketches, data_dir / "sketches.tsv")
    return photos, sketches


def split_all(
    config: PipelineConfig, photos: Catalog, sketches: Catalog
) -> tuple[Catalog, Catalog, Catalog, Catalog]:
    """(train photos, eval photos, train sketches, eval sketches), split by instance."""
    train_ph, eval_ph = split_train_eval(photos, config.eval_fraction, config.seed)
    train_sk = filter_by_instances(sketches, train_ph.instance_ids())
    eval_sk = filter_by_instances(sketches, eval_ph.instance_ids())
    return train_ph, eval_ph, train_sk, eval_sk


def stage_config_for(config: PipelineConfig, stage: int, alpha: float | None = None):
    return default_stage_config(
        stage,
        seed=config.seed,
        epochs=config.stage_epochs[stage - 1],
        batch_size=config.batch_size,
        lr=config.lr,
        loss=config.loss_params(alpha),
    )


def train_full(
    config: PipelineConfig,
    root,
    train_data: TrainData,
    val_data: TrainData,
    eval_photos: Catalog,
) -> DualBranchModel:
    """Run all three stages, saving a checkpoint and a history file per stage."""
    models_dir = Path(root) / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    model = build_model(
        embed_dim=config.embed_dim,
        class_count=config.shape_classes,
        input_side=config.input_side,
        seed=config.seed,
        conv_channels=config.conv_channels,
        hidden=config.hidden,
    )
    hist1 = train_stage1(model, stage_config_for(config, 1), train_data)
    save_checkpoint(model, models_dir / "stage1.sqnm")
    write_history(models_dir / "history_stage1.jsonl", hist1)

    hist2 = train_stage2(model, stage_config_for(config, 2), train_data)
    save_checkpoint(model, models_dir / "stage2.sqnm")
    write_history(models_dir / "history_stage2.jsonl", hist2)

    val_quads = sample_validation_quadruplets(eval_photos, config.seed, config.val_quad_count)
    hist3 = train_stage3(model, stage_config_for(config, 3), train_data, val_quads, val_data)
    save_checkpoint(model, models_dir / "stage3.sqnm")
    write_history(models_dir / "history_stage3.jsonl", hist3)
    return model


def train_stage3_variant(
    config: PipelineConfig,
    root,
    alpha: float,
    train_data: TrainData,
    val_data: TrainData,
    eval_photos: Catalog,
    tag: str,
) -> DualBranchModel:
    """Resume from the saved stage-2 checkpoint and run stage 3 at another alpha."""
    models_dir = Path(root) / "models"
    model = load_checkpoint(models_dir / "stage2.sqnm")
    val_quads = sample_validation_quadruplets(eval_photos, config.seed, config.val_quad_count)
    hist = train_stage3(model, stage_config_for(config, 3, alpha), train_data, val_quads, val_data)
    save_checkpoint(model, models_dir / f"stage3_{tag}.sqnm")
    write_history(models_dir / f"history_stage3_{tag}.jsonl", hist)
    return model


def qnet_eval_report(
    model: DualBranchModel,
    eval_photos: Catalog,
    val_data: TrainData,
    method: str,
    index: EmbeddingIndex | None = None,
) -> tuple[EvalReport, EmbeddingIndex]:
    """Rank every eval sketch against the eval-photo index by embedding distance."""
    if index is None:
        index = build_index(eval_photos, model)
    query_ids = val_data.sketch_bank.ids
    query_embs = embed_ids(model, val_data.sketch_bank, query_ids, "sketch")
    scores = euclidean_matrix(query_embs, index.embeddings)
    ordered = order_rows(index, scores, ascending=True)
    report = evaluate_ranking(
        ordered,
        index.ids,
        index.class_labels,
        query_ids,
        groundtruth_ids=query_ids,
        query_labels=val_data.sketch_bank.label_array(query_ids),
        method=method,
    )
    return report, index


def query_feature_sets(eval_sketches: Catalog):
    """Raw-image histograms for every eval sketch, in sorted-id order."""
    items = sorted(eval_sketches.items, key=lambda it: it.id)
    grid, stroke = [], []
    for it in items:
        img = load_png(eval_sketches.image_file(it))
        grid.append(grid_color_histogram(img))
        stroke.append(stroke_color_histogram(img))
    ids = np.array([it.id for it in items], dtype=np.int64)
    labels = np.array([it.class_label for it in items], dtype=np.int64)
    return ids, labels, grid, stroke


def baseline_eval_report(
    index: EmbeddingIndex,
    shape_model: DualBranchModel,
    val_data: TrainData,
    eval_sketches: Catalog,
    method: str,
    gamma: float = 0.5,
    omega: float = 0.5,
) -> EvalReport:
    query_ids, query_labels, grid, stroke = query_feature_sets(eval_sketches)
    query_embs = embed_ids(shape_model, val_data.sketch_bank, query_ids, "sketch")
    if method == "baseline1":
        shape, color = baseline1_components(index, query_embs, grid)
        ordered = order_rows(index, fused_distance(shape, color, gamma), ascending=True)
    elif method == "baseline2":
        color, cosine = baseline2_components(index, query_embs, stroke)
        ordered = order_rows(index, fused_similarity_geometric(color, cosine, omega), ascending=False)
    else:
        raise ValueError(f"unknown baseline method {method!r}")
    return evaluate_ranking(
        ordered, index.ids, index.class_labels, query_ids, query_ids, query_labels, method
    )


def _report_digest(report: EvalReport) -> dict:
    return {
        "mrr": report.mrr,
        "mean_ap": report.mean_ap,
        "halfway_n": report.halfway_n,
        "query_count": report.query_count,
        "index_size": report.index_size,
    }


def run_pipeline(root, config: PipelineConfig | None = None) -> dict:
    """Full scripted run; returns the summary dict written to reports/summary.json."""
    config = config if config is not None else PipelineConfig()
    root = Path(root)
    reports_dir = root / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)

    photos, sketches = prepare_data(config, root)
    train_ph, eval_ph, train_sk, eval_sk = split_all(config, photos, sketches)
    train_data = TrainData.from_catalogs(train_ph, train_sk, config.input_side)
    val_data = TrainData.from_catalogs(eval_ph, eval_sk, config.input_side)

    model3 = train_full(config, root, train_data, val_data, eval_ph)
    model2 = load_checkpoint(root / "models" / "stage2.sqnm")

    # Held-out ordering quality: one quadruplet per eval photo.
    quads = sample_validation_quadruplets(eval_ph, config.seed, count=None)
    dist2 = quadruplet_distances(model2, quads, val_data.sketch_bank, val_data.photo_bank)
    dist3 = quadruplet_distances(model3, quads, val_data.sketch_bank, val_data.photo_bank)

    # The service index carries stage-3 embeddings plus stage-2 shape/color
    # baseline features.
    index = build_index(eval_ph, model3, with_baselines=True, baseline_embedder=model2)
    save_index(index, root / "index")

    report3, _ = qnet_eval_report(model3, eval_ph, val_data, "qnet_stage3", index=index)
    report2, _ = qnet_eval_report(model2, eval_ph, val_data, "qnet_stage2")
    report3.save_json(reports_dir / "eval_qnet_stage3.json")
    report2.save_json(reports_dir / "eval_qnet_stage2.json")

    rep_b1 = baseline_eval_report(
        index, model2, val_data, eval_sk, "baseline1", gamma=config.gamma_default
    )
    rep_b2 = baseline_eval_report(
        index, model2, val_data, eval_sk, "baseline2", omega=config.omega_default
    )
    rep_b1.save_json(reports_dir / "eval_baseline1.json")
    rep_b2.save_json(reports_dir / "eval_baseline2.json")

    summary = {
        "config": asdict(config),
        "counts": {
            "photos": len(photos),
            "sketches": len(sketches),
            "train_photos": len(train_ph),
            "eval_photos": len(eval_ph),
            "eval_quadruplets": len(quads),
        },
        "ordering": {
            "stage2": {
                "chain_rate": chain_rate(dist2),
                "pos_neg_rate": pos_neg_rate(dist2),
                "mean_margin_gap": float((dist2[:, 1] - dist2[:, 0]).mean()),
            },
            "stage3": {
                "chain_rate": chain_rate(dist3),
                "pos_neg_rate": pos_neg_rate(dist3),
                "mean_margin_gap": float((dist3[:, 1] - dist3[:, 0]).mean()),
            },
        },
        "retrieval": {
            "qnet_stage3": _report_digest(report3),
            "qnet_stage2": _report_digest(report2),
            "baseline1": _report_digest(rep_b1),
            "baseline2": _report_digest(rep_b2),
        },
    }
    (reports_dir / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return summary
