"""Parameter sweeps: fusion weights on the baselines, alpha on the trained model.

Each sweep emits one JSONL table plus a PNG curve; file names encode the
method and the swept parameter. Component score matrices are computed once
and re-fused per grid value, so a sweep costs little more than one evaluation.
"""

from __future__ import annotations

import json
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .catalog import Catalog
from .index import EmbeddingIndex, build_index
from .metrics import EvalReport, evaluate_ranking
from .model import DualBranchModel, load_checkpoint
from .pipeline import PipelineConfig, query_feature_sets, train_stage3_variant
from .search import (
    baseline1_components,
    baseline2_components,
    euclidean_matrix,
    fused_distance,
    fused_similarity_geometric,
    order_rows,
)
from .training import TrainData, chain_rate, embed_ids, quadruplet_distances, sample_validation_quadruplets

GAMMA_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
OMEGA_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
ALPHA_GRID = (0.1, 0.25, 0.5, 0.75)


def alpha_tag(alpha: float) -> str:
    return f"a{alpha:.2f}".replace(".", "")


def _row(param: str, value: float, report: EvalReport, **extra) -> dict:
    row = {
        "param": param,
        "value": value,
        "mrr": report.mrr,
        "map": report.mean_ap,
        "halfway_n": report.halfway_n,
    }
    row.update(extra)
    return row


def sweep_gamma(
    index: EmbeddingIndex,
    shape_model: DualBranchModel,
    val_data: TrainData,
    eval_sketches: Catalog,
    grid=GAMMA_GRID,
) -> list[dict]:
    if not len(grid):
        raise ValueError("gamma grid must be nonempty")
    query_ids, query_labels, grid_hists, _ = query_feature_sets(eval_sketches)
    query_embs = embed_ids(shape_model, val_data.sketch_bank, query_ids, "sketch")
    shape, color = baseline1_components(index, query_embs, grid_hists)
    rows = []
    for gamma in grid:
        ordered = order_rows(index, fused_distance(shape, color, gamma), ascending=True)
        report = evaluate_ranking(
            ordered, index.ids, index.class_labels, query_ids, query_ids, query_labels,
            method=f"baseline1_gamma{gamma:g}",
        )
        rows.append(_row("gamma", gamma, report))
    return rows


def sweep_omega(
    index: EmbeddingIndex,
    shape_model: DualBranchModel,
    val_data: TrainData,
    eval_sketches: Catalog,
    grid=OMEGA_GRID,
) -> list[dict]:
    if not len(grid):
        raise ValueError("omega grid must be nonempty")
    query_ids, query_labels, _, stroke_hists = query_feature_sets(eval_sketches)
    query_embs = embed_ids(shape_model, val_data.sketch_bank, query_ids, "sketch")
    color, cosine = baseline2_components(index, query_embs, stroke_hists)
    rows = []
    for omega in grid:
        ordered = order_rows(
            index, fused_similarity_geometric(color, cosine, omega), ascending=False
        )
        report = evaluate_ranking(
            ordered, index.ids, index.class_labels, query_ids, query_ids, query_labels,
            method=f"baseline2_omega{omega:g}",
        )
        rows.append(_row("omega", omega, report))
    return rows


def alpha_checkpoint_path(root, config: PipelineConfig, alpha: float) -> Path:
    """The main run owns its alpha's checkpoint; other alphas get tagged files."""
    models_dir = Path(root) / "models"
    if alpha == config.alpha:
        return models_dir / "stage3.sqnm"
    return models_dir / f"stage3_{alpha_tag(alpha)}.sqnm"


def ensure_alpha_checkpoints(
    config: PipelineConfig,
    root,
    train_data: TrainData,
    val_data: TrainData,
    eval_photos: Catalog,
    alphas=ALPHA_GRID,
) -> None:
    """Train stage 3 from the shared stage-2 checkpoint for any missing alpha."""
    for alpha in alphas:
        path = alpha_checkpoint_path(root, config, alpha)
        if path.exists():
            continue
        train_stage3_variant(
            config, root, alpha, train_data, val_data, eval_photos, alpha_tag(alpha)
        )


def sweep_alpha(
    config: PipelineConfig,
    root,
    val_data: TrainData,
    eval_photos: Catalog,
    eval_sketches: Catalog,
    alphas=ALPHA_GRID,
) -> list[dict]:
    """One row per trained alpha checkpoint; missing checkpoints are skipped."""
    if not len(alphas):
        raise ValueError("alpha grid must be nonempty")
    quads = sample_validation_quadruplets(eval_photos, config.seed, count=None)
    query_ids = val_data.sketch_bank.ids
    query_labels = val_data.sketch_bank.label_array(query_ids)
    rows = []
    for alpha in alphas:
        path = alpha_checkpoint_path(root, config, alpha)
        if not path.exists():
            warnings.warn(f"no checkpoint for alpha={alpha} at {path}; row skipped")
            continue
        model = load_checkpoint(path)
        index = build_index(eval_photos, model)
        query_embs = embed_ids(model, val_data.sketch_bank, query_ids, "sketch")
        ordered = order_rows(
            index, euclidean_matrix(query_embs, index.embeddings), ascending=True
        )
        report = evaluate_ranking(
            ordered, index.ids, index.class_labels, query_ids, query_ids, query_labels,
            method=f"qnet_alpha{alpha:g}",
        )
        dist = quadruplet_distances(model, quads, val_data.sketch_bank, val_data.photo_bank)
        rows.append(
            _row(
                "alpha",
                alpha,
                report,
                chain_rate=chain_rate(dist),
                mean_margin_gap=float((dist[:, 1] - dist[:, 0]).mean()),
            )
        )
    return rows


def save_sweep(rows: list[dict], out_dir, method: str, param: str) -> tuple[Path, Path]:
    """Write sweep_<method>_<param>.jsonl and a matching PNG curve."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / f"sweep_{method}_{param}.jsonl"
    with open(table, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    plot = out_dir / f"sweep_{method}_{param}.png"
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        xs = [r["value"] for r in rows]
        ax.plot(xs, [r["mrr"] for r in rows], marker="o", label="MRR")
        ax.plot(xs, [r["map"] for r in rows], marker="s", label="mAP")
        ax.legend()
    ax.set_xlabel(param)
    ax.set_ylabel("score")
    ax.set_title(f"{method}: {param} sweep")
    fig.tight_layout()
    fig.savefig(plot, metadata={"Software": None})
    plt.close(fig)
    return table, plot


def plot_recall_curve(report: EvalReport, path) -> Path:
    """Recall-ratio-vs-N chart for one evaluation."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = [n for n, _ in report.recall_curve]
    fr = [f for _, f in report.recall_curve]
    ax.plot(ns, fr)
    ax.axhline(0.5, linestyle="--", linewidth=0.8)
    ax.set_xlabel("photos retrieved")
    ax.set_ylabel("queries finding groundtruth")
    ax.set_title(report.method)
    ax.set_ylim(0.0, 1.0)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
