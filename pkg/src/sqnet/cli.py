"""Command-line driver.

All artifacts live under one data root (--data, or SQNET_DATA_DIR, or
./sqnet-data) with the same layout the scripted pipeline writes:
data/ models/ index/ reports/. Every command's randomness hangs off --seed.

Exit codes: 0 success, 1 runtime failure (diagnostic on stderr), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .catalog import ToyConfig, generate_toy_catalog, load_catalog, persist_catalog
from .corpus import expand_with_variants, synthesize_sketch_catalog
from .imaging.augment import AugmentConfig, augment
from .imaging.sketch import SketchSynthParams
from .index import build_index, load_index, save_index
from .model import build_model, load_checkpoint, save_checkpoint
from .pipeline import (
    PipelineConfig,
    baseline_eval_report,
    qnet_eval_report,
    run_pipeline,
    small_config,
    split_all,
    stage_config_for,
)
from .raster import load_png, save_png
from .search import Searcher
from .service import ServiceConfig, run_service
from .sweeps import (
    ALPHA_GRID,
    GAMMA_GRID,
    OMEGA_GRID,
    ensure_alpha_checkpoints,
    save_sweep,
    sweep_alpha,
    sweep_gamma,
    sweep_omega,
)
from .training import (
    TrainData,
    sample_validation_quadruplets,
    train_stage1,
    train_stage2,
    train_stage3,
    write_history,
)


def _data_root(args) -> Path:
    if args.data is not None:
        return Path(args.data)
    env = os.environ.get("SQNET_DATA_DIR")
    return Path(env) if env else Path("sqnet-data")


def _config_from(args) -> PipelineConfig:
    cfg = small_config() if getattr(args, "small", False) else PipelineConfig()
    fields = {}
    for name in ("seed", "alpha", "eval_fraction", "batch_size", "input_side"):
        if getattr(args, name, None) is not None:
            fields[name] = getattr(args, name)
    if getattr(args, "lam", None) is not None:
        fields["lam"] = args.lam
    return replace(cfg, **fields) if fields else cfg


def _load_catalogs(root: Path):
    photos = load_catalog(root / "data" / "photos.tsv")
    sketches = load_catalog(root / "data" / "sketches.tsv")
    return photos, sketches


def _split_data(root: Path, config: PipelineConfig):
    photos, sketches = _load_catalogs(root)
    return split_all(config, photos, sketches)


def cmd_toygen(args) -> int:
    root = _data_root(args)
    cfg = ToyConfig(
        shape_classes=args.classes,
        base_colors=args.colors,
        items_per_class=args.per_class,
        canvas=args.canvas,
        seed=args.seed,
    )
    catalog = generate_toy_catalog(cfg, root / "data")
    persist_catalog(catalog, root / "data" / "photos.tsv")
    print(f"wrote {len(catalog)} photos under {root / 'data'}")
    return 0


def cmd_variants(args) -> int:
    root = _data_root(args)
    photos = load_catalog(root / "data" / "photos.tsv")
    expanded = expand_with_variants(photos)
    persist_catalog(expanded, root / "data" / "photos.tsv")
    print(f"catalog now lists {len(expanded)} photos (was {len(photos)})")
    return 0


def cmd_sketchify(args) -> int:
    root = _data_root(args)
    photos = load_catalog(root / "data" / "photos.tsv")
    sketches = synthesize_sketch_catalog(photos, SketchSynthParams(seed=args.seed))
    persist_catalog(sketches, root / "data" / "sketches.tsv")
    print(f"synthesized {len(sketches)} sketches")
    return 0


def cmd_augment(args) -> int:
    img = load_png(args.image)
    out = augment(img, AugmentConfig(seed=args.seed), item_key=args.key)
    save_png(args.out, out)
    print(f"wrote {args.out}")
    return 0


def cmd_train(args) -> int:
    root = _data_root(args)
    config = _config_from(args)
    train_ph, eval_ph, train_sk, eval_sk = _split_data(root, config)
    train_data = TrainData.from_catalogs(train_ph, train_sk, config.input_side)
    models_dir = root / "models"
    models_dir.mkdir(parents=True, exist_ok=True)

    stage = args.stage
    stage_cfg = stage_config_for(config, stage)
    if args.epochs is not None:
        stage_cfg = replace(stage_cfg, epochs=args.epochs)
    if stage == 1:
        model = build_model(
            embed_dim=config.embed_dim,
            class_count=config.shape_classes,
            input_side=config.input_side,
            seed=config.seed,
            conv_channels=config.conv_channels,
            hidden=config.hidden,
        )
        history = train_stage1(model, stage_cfg, train_data)
    else:
        prev = models_dir / f"stage{stage - 1}.sqnm"
        if not prev.is_file():
            raise FileNotFoundError(f"stage {stage} needs {prev}; train stage {stage - 1} first")
        model = load_checkpoint(prev)
        if stage == 2:
            history = train_stage2(model, stage_cfg, train_data)
        else:
            val_data = TrainData.from_catalogs(eval_ph, eval_sk, config.input_side)
            val_quads = sample_validation_quadruplets(eval_ph, config.seed, config.val_quad_count)
            history = train_stage3(model, stage_cfg, train_data, val_quads, val_data)
    save_checkpoint(model, models_dir / f"stage{stage}.sqnm")
    write_history(models_dir / f"history_stage{stage}.jsonl", history)
    tail = history[-1] if history else {}
    print(f"stage {stage} done: {json.dumps(tail, sort_keys=True)}")
    return 0


def cmd_index(args) -> int:
    root = _data_root(args)
    config = _config_from(args)
    _, eval_ph, _, _ = _split_data(root, config)
    model = load_checkpoint(root / "models" / "stage3.sqnm")
    shape_path = root / "models" / "stage2.sqnm"
    shape_model = load_checkpoint(shape_path) if shape_path.is_file() else None
    index = build_index(
        eval_ph, model, with_baselines=shape_model is not None, baseline_embedder=shape_model
    )
    save_index(index, root / "index")
    print(f"indexed {len(index)} photos ({len(index.skipped)} skipped)")
    return 0


def _searcher(root: Path) -> Searcher:
    index = load_index(root / "index")
    model = load_checkpoint(root / "models" / "stage3.sqnm")
    shape_path = root / "models" / "stage2.sqnm"
    shape_model = load_checkpoint(shape_path) if shape_path.is_file() else None
    return Searcher(index, model, shape_model)


def cmd_query(args) -> int:
    root = _data_root(args)
    searcher = _searcher(root)
    sketch = load_png(args.sketch)
    results = searcher.search(
        sketch, method=args.method, top_k=args.topk, gamma=args.gamma, omega=args.omega
    )
    for r in results:
        print(f"{r.rank}\t{r.item_id}\t{r.score:.8f}")
    return 0


def cmd_eval(args) -> int:
    root = _data_root(args)
    config = _config_from(args)
    _, eval_ph, _, eval_sk = _split_data(root, config)
    val_data = TrainData.from_catalogs(eval_ph, eval_sk, config.input_side)
    reports_dir = root / "reports"

    model3 = load_checkpoint(root / "models" / "stage3.sqnm")
    index = load_index(root / "index") if (root / "index" / "meta.json").is_file() else None
    report3, index = qnet_eval_report(model3, eval_ph, val_data, "qnet_stage3", index=index)
    report3.save_json(reports_dir / "eval_qnet_stage3.json")
    print(f"qnet_stage3\tmrr={report3.mrr:.4f}\tmap={report3.mean_ap:.4f}")

    stage2_path = root / "models" / "stage2.sqnm"
    if stage2_path.is_file():
        model2 = load_checkpoint(stage2_path)
        report2, _ = qnet_eval_report(model2, eval_ph, val_data, "qnet_stage2")
        report2.save_json(reports_dir / "eval_qnet_stage2.json")
        print(f"qnet_stage2\tmrr={report2.mrr:.4f}\tmap={report2.mean_ap:.4f}")
        if index.baseline is not None:
            for method, param in (("baseline1", config.gamma_default), ("baseline2", config.omega_default)):
                rep = baseline_eval_report(
                    index, model2, val_data, eval_sk, method, gamma=param, omega=param
                )
                rep.save_json(reports_dir / f"eval_{method}.json")
                print(f"{method}\tmrr={rep.mrr:.4f}\tmap={rep.mean_ap:.4f}")
    return 0


def cmd_sweep(args) -> int:
    root = _data_root(args)
    config = _config_from(args)
    train_ph, eval_ph, train_sk, eval_sk = _split_data(root, config)
    val_data = TrainData.from_catalogs(eval_ph, eval_sk, config.input_side)
    reports_dir = root / "reports"

    if args.param in ("gamma", "omega"):
        index = load_index(root / "index")
        if index.baseline is None:
            raise ValueError("index has no baseline features; rebuild with stage-2 checkpoint")
        shape_model = load_checkpoint(root / "models" / "stage2.sqnm")
        if args.param == "gamma":
            rows = sweep_gamma(index, shape_model, val_data, eval_sk, GAMMA_GRID)
            table, plot = save_sweep(rows, reports_dir, "baseline1", "gamma")
        else:
            rows = sweep_omega(index, shape_model, val_data, eval_sk, OMEGA_GRID)
            table, plot = save_sweep(rows, reports_dir, "baseline2", "omega")
    else:
        if args.train_missing:
            train_data = TrainData.from_catalogs(train_ph, train_sk, config.input_side)
            ensure_alpha_checkpoints(config, root, train_data, val_data, eval_ph, ALPHA_GRID)
        rows = sweep_alpha(config, root, val_data, eval_ph, eval_sk, ALPHA_GRID)
        table, plot = save_sweep(rows, reports_dir, "qnet", "alpha")
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    print(f"wrote {table} and {plot}")
    return 0


def cmd_run(args) -> int:
    root = _data_root(args)
    summary = run_pipeline(root, _config_from(args))
    print(json.dumps(summary["retrieval"], sort_keys=True, indent=2))
    return 0


def cmd_serve(args) -> int:
    root = _data_root(args)
    shape_path = root / "models" / "stage2.sqnm"
    config = ServiceConfig(
        index_dir=str(root / "index"),
        checkpoint_path=str(root / "models" / "stage3.sqnm"),
        catalog_path=str(root / "data" / "photos.tsv"),
        shape_checkpoint_path=str(shape_path) if shape_path.is_file() else None,
        port=args.port,
    )
    run_service(config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sqnet", description="color sketch-based image retrieval toolkit"
    )
    parser.add_argument("--data", help="data root (default: $SQNET_DATA_DIR or ./sqnet-data)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toygen", help="generate the toy photo catalog")
    p.add_argument("--classes", type=int, default=8)
    p.add_argument("--colors", type=int, default=5)
    p.add_argument("--per-class", dest="per_class", type=int, default=200)
    p.add_argument("--canvas", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    # SUPPRESS keeps this subparser default from clobbering the top-level --data
    p.add_argument("--out", dest="data", default=argparse.SUPPRESS, help="alias for --data")
    p.set_defaults(func=cmd_toygen)

    p = sub.add_parser("variants", help="add hue and grayscale renditions")
    p.set_defaults(func=cmd_variants)

    p = sub.add_parser("sketchify", help="synthesize one color sketch per photo")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sketchify)

    p = sub.add_parser("augment", help="apply a seeded augmentation to one image")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--key", type=int, default=0)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="run one training stage")
    p.add_argument("--stage", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--input-side", dest="input_side", type=int, default=None)
    p.add_argument("--small", action="store_true", help="reduced-scale defaults")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("index", help="embed eval photos into a searchable index")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--small", action="store_true")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="rank the index for a sketch image")
    p.add_argument("--sketch", required=True)
    p.add_argument("--method", choices=("qnet", "baseline1", "baseline2"), default="qnet")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--topk", type=int, default=10)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score retrieval quality on the eval split")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--small", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="sweep a fusion weight or alpha checkpoints")
    p.add_argument("--param", choices=("gamma", "omega", "alpha"), required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--small", action="store_true")
    p.add_argument("--train-missing", dest="train_missing", action="store_true",
                   help="train stage 3 for alphas without a checkpoint")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("run", help="scripted end-to-end pipeline")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--small", action="store_true", help="reduced-scale run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="start the HTTP query service")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - single CLI error boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
