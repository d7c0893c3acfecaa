"""HTTP inference service backing the try-on UI.

Endpoints:
    GET  /health   -> {"status": "ok"}
    GET  /catalog  -> {"persons": [{id, thumb}], "garments": [{id, thumb}]}
    POST /tryon    -> try-on result with base64 PNG payloads
"""

from __future__ import annotations

import base64
from pathlib import Path

import cv2
import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .config import PipelineConfig
from .core_data import RGBImage
from .dataset import TrainingSample
from .errors import EmptyTargetRegion, MissingAsset
from .inference import TryonPipeline
from .toydata import generate_toy_scene, toy_val_seeds


def encode_png(img: RGBImage) -> str:
    arr = ((img.data + 1.0) * 127.5).round().clip(0, 255).astype(np.uint8)
    ok, buf = cv2.imencode(".png", cv2.cvtColor(arr, cv2.COLOR_RGB2BGR))
    if not ok:
        raise RuntimeError("PNG encoding failed")
    return base64.b64encode(buf.tobytes()).decode("ascii")


# One display color per parse label, values in [-1, 1].
_SEG_PALETTE = np.array([
    [1.0, 0.2, 0.2], [1.0, 0.8, 0.6], [0.9, 0.9, 0.2], [0.2, 1.0, 0.2],
    [0.2, 0.8, 1.0], [0.2, 0.2, 1.0], [0.8, 0.2, 1.0], [1.0, 0.5, 0.0],
    [0.0, 0.5, 0.5], [-0.9, -0.9, -0.9],
], dtype=np.float32)


def segmentation_visualization(seg) -> RGBImage:
    labels = np.argmax(seg.data, axis=2)
    return RGBImage(_SEG_PALETTE[labels])


class TryonRequest(BaseModel):
    person_id: str
    garment_id: str


def toy_catalog(config: PipelineConfig, n_persons: int = 12, n_garments: int = 12
                ) -> dict[str, TrainingSample]:
    seeds = toy_val_seeds(max(n_persons, n_garments))
    return {f"toy-{s}": generate_toy_scene(s, config.geometry) for s in seeds}


def create_app(config: PipelineConfig, checkpoint_dir: str | Path,
               samples: dict[str, TrainingSample] | None = None,
               cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="garment try-on service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    if samples is None:
        samples = toy_catalog(config)
    state = {"pipeline": None}

    def pipeline() -> TryonPipeline:
        if state["pipeline"] is None:
            try:
                state["pipeline"] = TryonPipeline(config, checkpoint_dir)
            except MissingAsset as exc:
                raise HTTPException(
                    status_code=503,
                    detail={"code": "checkpoint_missing", "message": str(exc)},
                ) from exc
        return state["pipeline"]

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/catalog")
    def catalog():
        persons = [{"id": sid, "thumb": encode_png(s.person)}
                   for sid, s in samples.items()]
        garments = [{"id": sid, "thumb": encode_png(s.cloth)}
                    for sid, s in samples.items()]
        return {"persons": persons, "garments": garments}

    @app.post("/tryon")
    def tryon(req: TryonRequest):
        person = samples.get(req.person_id)
        if person is None:
            raise HTTPException(
                status_code=404,
                detail={"code": "unknown_person", "message": req.person_id})
        garment_sample = samples.get(req.garment_id)
        if garment_sample is None:
            raise HTTPException(
                status_code=404,
                detail={"code": "unknown_garment", "message": req.garment_id})
        pipe = pipeline()
        try:
            result = pipe.infer_sample(person, garment_sample.cloth)
        except EmptyTargetRegion as exc:
            raise HTTPException(
                status_code=422,
                detail={"code": "empty_target_region", "message": str(exc)},
            ) from exc
        seg_vis = segmentation_visualization(result.composed_seg)
        return {
            "person_id": req.person_id,
            "garment_id": req.garment_id,
            "result_png": encode_png(result.output),
            "seg_png": encode_png(seg_vis),
            "warped_png": encode_png(result.warped_cloth),
            "timing_ms": result.timing_ms,
        }

    return app
