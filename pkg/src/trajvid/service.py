"""HTTP inference service for interactive trajectory-guided generation."""

from __future__ import annotations

import base64
import io
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from PIL import Image
from pydantic import BaseModel, Field

from . import metrics
from .bundle import ModelBundle
from .synth import SceneSpec, VideoSample, generate_scene, interpolate_boxes

MAX_QUEUE_DEPTH = 8

DEFAULT_SCENES = (
    {"id": "one-circle", "num_objects": 1, "seed": 11},
    {"id": "two-shapes", "num_objects": 2, "seed": 23},
    {"id": "three-shapes", "num_objects": 3, "seed": 46},
)


def _png_b64(frame: np.ndarray) -> str:
    img = Image.fromarray(np.round(frame * 255.0).astype(np.uint8))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode()


class Keyframe(BaseModel):
    frame: int
    boxes: list[list[float]]


class GenerateRequest(BaseModel):
    scene_id: str
    keyframes: list[Keyframe]
    steps: int | None = None
    seed: int = 0
    generator: str = Field(default="fast", pattern="^(fast|slow)$")
    self_check: bool = True


class SceneStore:
    """Deterministic catalog of demo scenes, rendered once at startup."""

    def __init__(self, num_frames: int = 8, height: int = 32, width: int = 32):
        self.samples: dict[str, VideoSample] = {}
        self.shape = (num_frames, height, width)
        for entry in DEFAULT_SCENES:
            spec = SceneSpec(num_objects=entry["num_objects"], num_frames=num_frames,
                             height=height, width=width, seed=entry["seed"])
            self.samples[entry["id"]] = generate_scene(spec)

    def catalog(self) -> list[dict]:
        out = []
        for sid, s in self.samples.items():
            out.append({
                "id": sid,
                "num_objects": s.num_objects,
                "num_frames": self.shape[0],
                "height": self.shape[2],
                "width": self.shape[2],
                "palette": s.palette.tolist(),
                "first_frame_png": _png_b64(s.frames[0]),
                "initial_boxes": s.boxes.tolist(),
            })
        return out


def create_app(bundle_dir: str | Path) -> FastAPI:
    bundle = ModelBundle(bundle_dir)
    scenes = SceneStore()
    app = FastAPI(title="trajvid")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    infer_lock = threading.Lock()
    waiting = {"n": 0}
    waiting_lock = threading.Lock()

    @app.get("/api/health")
    def health():
        with waiting_lock:
            depth = waiting["n"]
        return {"status": "ok", "ready": True, "queue_depth": depth}

    @app.get("/api/config")
    def config():
        info = bundle.info()
        info["scene_shape"] = {"num_frames": scenes.shape[0],
                               "height": scenes.shape[1], "width": scenes.shape[2]}
        info["has_slow"] = bundle.slow_generator is not None
        return info

    @app.get("/api/scenes")
    def list_scenes():
        return {"scenes": scenes.catalog()}

    @app.post("/api/generate")
    def generate(req: GenerateRequest):
        sample = scenes.samples.get(req.scene_id)
        if sample is None:
            raise HTTPException(status_code=400, detail=f"unknown scene {req.scene_id!r}")
        f, h, w = scenes.shape
        if req.generator == "slow" and bundle.slow_generator is None:
            raise HTTPException(status_code=400, detail="no slow generator in bundle")
        try:
            keyframes = [(kf.frame, np.asarray(kf.boxes, dtype=np.float64))
                         for kf in req.keyframes]
            boxes = interpolate_boxes(keyframes, f)
        except ValueError as e:
            raise HTTPException(status_code=400, detail=str(e))
        if boxes.shape[1] != sample.num_objects:
            raise HTTPException(status_code=400,
                                detail=f"scene has {sample.num_objects} objects, "
                                       f"got {boxes.shape[1]} box tracks")
        if np.any(boxes < 0) or np.any(boxes[..., [0, 2]] > w) or np.any(boxes[..., [1, 3]] > h):
            raise HTTPException(status_code=400, detail="boxes out of bounds")
        steps = req.steps
        if steps is not None and not 1 <= steps <= 1000:
            raise HTTPException(status_code=400, detail="steps must be in [1, 1000]")

        with waiting_lock:
            if waiting["n"] >= MAX_QUEUE_DEPTH:
                raise HTTPException(status_code=409, detail="queue full, retry later")
            waiting["n"] += 1
        try:
            with infer_lock:
                t0 = time.perf_counter()
                use_slow = req.generator == "slow"
                if steps is None:
                    steps = 50 if use_slow else bundle.default_steps
                try:
                    video, _ = bundle.generate(sample, steps=steps, seed=req.seed,
                                               boxes_override=boxes, use_slow=use_slow)
                except Exception as e:
                    raise HTTPException(status_code=500, detail=f"inference failed: {e}")
                wall_ms = (time.perf_counter() - t0) * 1000.0
        finally:
            with waiting_lock:
                waiting["n"] -= 1

        resp = {
            "frames_png": [_png_b64(video[i]) for i in range(video.shape[0])],
            "per_frame_boxes": boxes.tolist(),
            "wall_time_ms": wall_ms,
            "steps": steps,
            "generator": req.generator,
            "seed": req.seed,
        }
        if req.self_check:
            pred = metrics.boxes_from_generated(video, sample.palette, sample.background)
            try:
                resp["self_check_box_iou"] = metrics.box_iou(
                    pred.astype(np.float64), boxes)
            except metrics.UndefinedMetricError:
                resp["self_check_box_iou"] = None
        return resp

    return app
