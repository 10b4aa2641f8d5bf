"""HTTP query service over an immutable index.

Endpoints:
    POST /api/query                  base64 PNG sketch + method params -> ranked JSON
    GET  /api/items/{id}/thumbnail   stored image as a small PNG
    GET  /api/health                 {status, index_size, embed_dim}

Artifacts load once at startup and are shared read-only across requests; no
request mutates server state, so restarting never changes a ranking.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from PIL import Image
from pydantic import BaseModel

from .catalog import load_catalog
from .index import load_index
from .model import load_checkpoint
from .raster import decode_png_bytes, encode_png_bytes, load_png
from .search import METHODS, Searcher

MAX_UPLOAD_BYTES = 2 * 1024 * 1024


@dataclass(frozen=True)
class ServiceConfig:
    index_dir: str
    checkpoint_path: str
    catalog_path: str
    shape_checkpoint_path: str | None = None
    port: int = 8000
    gamma: float = 0.5
    omega: float = 0.5
    top_k: int = 20
    thumbnail_side: int = 96

    def __post_init__(self):
        if not (0 < self.port < 65536):
            raise ValueError(f"port must be in 1..65535, got {self.port}")
        for label, p in (
            ("index_dir", self.index_dir),
            ("checkpoint_path", self.checkpoint_path),
            ("catalog_path", self.catalog_path),
        ):
            if not Path(p).exists():
                raise FileNotFoundError(f"{label} does not exist: {p}")
        if self.shape_checkpoint_path is not None and not Path(self.shape_checkpoint_path).exists():
            raise FileNotFoundError(
                f"shape_checkpoint_path does not exist: {self.shape_checkpoint_path}"
            )
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.thumbnail_side < 8:
            raise ValueError(f"thumbnail_side must be >= 8, got {self.thumbnail_side}")


class QueryRequest(BaseModel):
    image_base64: str
    method: str = "qnet"
    topk: int | None = None
    gamma: float | None = None
    omega: float | None = None


def _decode_sketch(payload: str) -> np.ndarray:
    try:
        raw = base64.b64decode(payload, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"invalid base64 payload: {exc}")
    if len(raw) > MAX_UPLOAD_BYTES:
        raise HTTPException(
            status_code=413,
            detail=f"decoded upload is {len(raw)} bytes; limit is {MAX_UPLOAD_BYTES}",
        )
    try:
        return decode_png_bytes(raw)
    except (OSError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"cannot decode PNG image: {exc}")


def create_app(config: ServiceConfig) -> FastAPI:
    index = load_index(config.index_dir)
    model = load_checkpoint(config.checkpoint_path)
    shape_model = (
        load_checkpoint(config.shape_checkpoint_path)
        if config.shape_checkpoint_path is not None
        else None
    )
    catalog = load_catalog(config.catalog_path)
    items_by_id = catalog.by_id()
    searcher = Searcher(index, model, shape_model)

    app = FastAPI(title="sqnet query service")
    app.state.config = config
    app.state.index = index

    @app.get("/api/health")
    def health():
        return {"status": "ok", "index_size": len(index), "embed_dim": index.embed_dim}

    @app.post("/api/query")
    def query(body: QueryRequest):
        if body.method not in METHODS:
            raise HTTPException(
                status_code=400,
                detail=f"unknown method {body.method!r}; expected one of {list(METHODS)}",
            )
        topk = body.topk if body.topk is not None else config.top_k
        if topk < 1:
            raise HTTPException(status_code=400, detail=f"topk must be >= 1, got {topk}")
        sketch = _decode_sketch(body.image_base64)
        if sketch.shape[0] < 2 or sketch.shape[1] < 2:
            raise HTTPException(status_code=400, detail="sketch must be at least 2x2 pixels")
        gamma = body.gamma if body.gamma is not None else config.gamma
        omega = body.omega if body.omega is not None else config.omega
        if not (0.0 <= gamma <= 1.0):
            raise HTTPException(status_code=400, detail=f"gamma must lie in [0, 1], got {gamma}")
        if not (0.0 <= omega <= 1.0):
            raise HTTPException(status_code=400, detail=f"omega must lie in [0, 1], got {omega}")
        try:
            results = searcher.search(
                sketch, method=body.method, top_k=topk, gamma=gamma, omega=omega
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        label_of = dict(zip(index.ids.tolist(), index.class_labels.tolist()))
        return [
            {
                "id": r.item_id,
                "score": r.score,
                "rank": r.rank,
                "thumbnail_url": f"/api/items/{r.item_id}/thumbnail",
                "class_label": label_of[r.item_id],
            }
            for r in results
        ]

    @app.get("/api/items/{item_id}/thumbnail")
    def thumbnail(item_id: int):
        item = items_by_id.get(item_id)
        if item is None:
            raise HTTPException(status_code=404, detail=f"unknown item id {item_id}")
        try:
            img = load_png(catalog.image_file(item))
        except (OSError, ValueError) as exc:
            raise HTTPException(status_code=404, detail=f"image unavailable: {exc}")
        side = config.thumbnail_side
        pil = Image.fromarray(img).resize((side, side), Image.BILINEAR)
        png = encode_png_bytes(np.asarray(pil, dtype=np.uint8))
        return Response(content=png, media_type="image/png")

    return app


def run_service(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host="127.0.0.1", port=config.port, log_level="warning")
