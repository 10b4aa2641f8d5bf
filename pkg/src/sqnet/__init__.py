"""Color sketch-based image retrieval: draw a rough color sketch, get photos.

A dual-branch convolutional embedder is trained in three stages (per-branch
classification, joint classification plus contrastive alignment, then a
two-hinge ordering loss over sketch/photo quadruplets) so that a sketch lands
nearest photos of the same object in the same colors, then same object in
other colors, then everything else. Color-histogram baselines with tunable
fusion weights ride along for comparison, behind one index, CLI, and HTTP
service.
"""

from .catalog import Catalog, CatalogItem, ToyConfig, generate_toy_catalog, load_catalog, persist_catalog, split_train_eval
from .index import EmbeddingIndex, build_index, load_index, save_index
from .losses import QuadrupletLossParams, quadruplet_losses, split_margin, triplet_loss
from .metrics import EvalReport, average_precision, mean_average_precision, mrr, recall_ratio_curve
from .model import DualBranchModel, ModelConfig, build_model, load_checkpoint, save_checkpoint
from .pipeline import PipelineConfig, run_pipeline, small_config
from .quadruplets import Quadruplet, QuadrupletSampler, form_quadruplet
from .search import RankedResult, Searcher, fused_distance, fused_similarity_geometric
from .service import ServiceConfig, create_app
from .training import StageConfig, default_stage_config, train_stage

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "CatalogItem",
    "ToyConfig",
    "generate_toy_catalog",
    "load_catalog",
    "persist_catalog",
    "split_train_eval",
    "EmbeddingIndex",
    "build_index",
    "load_index",
    "save_index",
    "QuadrupletLossParams",
    "quadruplet_losses",
    "split_margin",
    "triplet_loss",
    "EvalReport",
    "average_precision",
    "mean_average_precision",
    "mrr",
    "recall_ratio_curve",
    "DualBranchModel",
    "ModelConfig",
    "build_model",
    "load_checkpoint",
    "save_checkpoint",
    "PipelineConfig",
    "run_pipeline",
    "small_config",
    "Quadruplet",
    "QuadrupletSampler",
    "form_quadruplet",
    "RankedResult",
    "Searcher",
    "fused_distance",
    "fused_similarity_geometric",
    "ServiceConfig",
    "create_app",
    "StageConfig",
    "default_stage_config",
    "train_stage",
    "__version__",
]
