import base64
import io

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient
from PIL import Image

from trajvid.bundle import write_bundle
from trajvid.denoiser import DenoiserConfig, build_denoiser
from trajvid.model_io import save_adapter, save_denoiser
from trajvid.adapter import build_adapter
from trajvid.schedule import NoiseSchedule
from trajvid.service import create_app
from trajvid.synth import interpolate_boxes


@pytest.fixture(scope="module")
def client(tmp_path_factory):
    d = tmp_path_factory.mktemp("svc_bundle")
    mc = DenoiserConfig(num_blocks=2, hidden_dim=32, num_heads=2)
    sch = NoiseSchedule()
    model = build_denoiser(mc, seed=0)
    with torch.no_grad():
        model.out_proj.weight.normal_(0, 0.02)  # live output head
    save_denoiser(d / "gen.ckpt", model, sch, role="student")
    save_adapter(d / "ad.ckpt", build_adapter("resnet", mc, seed=1))
    write_bundle(d, "gen.ckpt", adapter="ad.ckpt", slow_generator="gen.ckpt",
                 slow_adapter="ad.ckpt")
    return TestClient(create_app(d))


def _request(client, scene_idx=0, **over):
    scenes = client.get("/api/scenes").json()["scenes"]
    sc = scenes[scene_idx]
    boxes = sc["initial_boxes"][0]
    req = {"scene_id": sc["id"], "steps": 2, "seed": 1,
           "keyframes": [{"frame": 0, "boxes": boxes},
                         {"frame": sc["num_frames"] - 1, "boxes": boxes}]}
    req.update(over)
    return sc, req


def test_health(client):
    r = client.get("/api/health")
    assert r.status_code == 200
    body = r.json()
    assert body["ready"] is True and body["queue_depth"] == 0


def test_config_exposes_hashes(client):
    body = client.get("/api/config").json()
    assert "checkpoint_hashes" in body
    assert body["default_steps"] == 4
    assert body["has_slow"] is True


def test_scene_catalog(client):
    scenes = client.get("/api/scenes").json()["scenes"]
    assert [s["num_objects"] for s in scenes] == [1, 2, 3]
    for s in scenes:
        png = base64.b64decode(s["first_frame_png"])
        img = Image.open(io.BytesIO(png))
        assert img.size == (s["width"], s["height"])
        assert len(s["initial_boxes"]) == s["num_frames"]


def test_generate_contract(client):
    sc, req = _request(client)
    r = client.post("/api/generate", json=req)
    assert r.status_code == 200
    body = r.json()
    assert len(body["frames_png"]) == sc["num_frames"]
    assert body["wall_time_ms"] > 0
    assert body["steps"] == 2
    img = Image.open(io.BytesIO(base64.b64decode(body["frames_png"][0])))
    assert img.size == (sc["width"], sc["height"])
    boxes = np.asarray(body["per_frame_boxes"])
    assert boxes.shape == (sc["num_frames"], sc["num_objects"], 4)


def test_generate_matches_interpolation_oracle(client):
    scenes = client.get("/api/scenes").json()["scenes"]
    sc = scenes[0]
    b0 = [[2.0, 2.0, 8.0, 8.0]]
    b1 = [[20.0, 12.0, 26.0, 18.0]]
    req = {"scene_id": sc["id"], "steps": 1, "seed": 0,
           "keyframes": [{"frame": 0, "boxes": b0},
                         {"frame": sc["num_frames"] - 1, "boxes": b1}]}
    r = client.post("/api/generate", json=req)
    expect = interpolate_boxes([(0, np.array(b0)), (sc["num_frames"] - 1, np.array(b1))],
                               sc["num_frames"])
    assert np.allclose(np.asarray(r.json()["per_frame_boxes"]), expect)


def test_generate_deterministic(client):
    _, req = _request(client)
    a = client.post("/api/generate", json=req).json()
    b = client.post("/api/generate", json=req).json()
    assert a["frames_png"] == b["frames_png"]
    c = client.post("/api/generate", json=dict(req, seed=99)).json()
    assert a["frames_png"] != c["frames_png"]


def test_generate_slow_generator(client):
    _, req = _request(client, generator="slow", steps=3)
    r = client.post("/api/generate", json=req)
    assert r.status_code == 200
    assert r.json()["generator"] == "slow"


def test_fast_wall_time_below_slow(client):
    # default step counts: 4 for the fast generator, 50 for the slow one
    _, req = _request(client)
    del req["steps"]
    fast = client.post("/api/generate", json=req).json()
    slow = client.post("/api/generate", json=dict(req, generator="slow")).json()
    assert fast["steps"] == 4 and slow["steps"] == 50
    assert fast["wall_time_ms"] < slow["wall_time_ms"]


def test_generate_validation_errors(client):
    sc, req = _request(client)
    assert client.post("/api/generate",
                       json=dict(req, scene_id="missing")).status_code == 400
    assert client.post("/api/generate",
                       json=dict(req, keyframes=req["keyframes"][:1])).status_code == 400
    assert client.post("/api/generate", json=dict(req, steps=0)).status_code == 400
    bad_boxes = [{"frame": 0, "boxes": [[-5.0, 0.0, 4.0, 4.0]]},
                 req["keyframes"][1]]
    assert client.post("/api/generate",
                       json=dict(req, keyframes=bad_boxes)).status_code == 400
    wrong_count = [{"frame": 0, "boxes": [[0, 0, 4, 4], [5, 5, 9, 9]]},
                   {"frame": sc["num_frames"] - 1, "boxes": [[0, 0, 4, 4], [5, 5, 9, 9]]}]
    assert client.post("/api/generate",
                       json=dict(req, keyframes=wrong_count)).status_code == 400


def test_generate_self_check_field(client):
    _, req = _request(client)
    body = client.post("/api/generate", json=req).json()
    assert "self_check_box_iou" in body
    body2 = client.post("/api/generate", json=dict(req, self_check=False)).json()
    assert "self_check_box_iou" not in body2
