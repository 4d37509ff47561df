"""Model bundles and the grouped benchmark harness."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from . import codec, metrics
from .checkpoint import file_hash
from .denoiser import Conditioning
from .model_io import load_adapter, load_denoiser
from .sampling import rollout
from .synth import (VideoSample, boxes_from_masks, boxes_to_trajectory_frames,
                    read_dataset, render_trajectory_map)


class ModelBundle:
    """Generator (+ optional trajectory adapter) loaded from a bundle directory.

    Layout: bundle.json naming the checkpoint files; keys `generator` and
    optional `adapter`, `slow_generator`, `slow_adapter`, `default_steps`.
    """

    def __init__(self, bundle_dir: str | Path):
        self.dir = Path(bundle_dir)
        meta_path = self.dir / "bundle.json"
        if not meta_path.exists():
            raise FileNotFoundError(f"missing bundle.json in {self.dir}")
        self.meta = json.loads(meta_path.read_text())
        gen_path = self.dir / self.meta["generator"]
        self.generator, self.schedule, self.gen_header = load_denoiser(gen_path)
        self.generator.eval()
        self.adapter = None
        if self.meta.get("adapter"):
            self.adapter, _ = load_adapter(self.dir / self.meta["adapter"],
                                           generator=self.generator)
            self.adapter.eval()
        self.slow_generator = None
        self.slow_adapter = None
        if self.meta.get("slow_generator"):
            self.slow_generator, _, _ = load_denoiser(self.dir / self.meta["slow_generator"])
            self.slow_generator.eval()
            if self.meta.get("slow_adapter"):
                self.slow_adapter, _ = load_adapter(self.dir / self.meta["slow_adapter"],
                                                    generator=self.slow_generator)
                self.slow_adapter.eval()
        self.hashes = {name: file_hash(self.dir / fname)
                       for name, fname in self.meta.items()
                       if isinstance(fname, str) and fname.endswith(".ckpt")}

    @property
    def default_steps(self) -> int:
        return int(self.meta.get("default_steps", 4))

    def info(self) -> dict:
        return {
            "checkpoint_hashes": self.hashes,
            "default_steps": self.default_steps,
            "adapter_kind": self.adapter.kind if self.adapter is not None else None,
            "generator_config": self.gen_header["config"],
            "schedule": {"T": self.schedule.T,
                         "fewstep_grid": list(self.schedule.fewstep_grid)},
        }

    def conditioning(self, sample: VideoSample) -> Conditioning:
        x0 = codec.encode(sample.frames).data
        return Conditioning(
            caption_tokens=torch.tensor([sample.caption_tokens], dtype=torch.long),
            first_frame=torch.tensor(x0[None, 0], dtype=torch.float32),
        )

    def trajectory_latent(self, sample: VideoSample, map_mode: str = "sparse",
                          boxes_override: np.ndarray | None = None) -> torch.Tensor:
        if boxes_override is not None:
            frames = boxes_to_trajectory_frames(boxes_override, sample.palette,
                                                sample.frames.shape[1], sample.frames.shape[2])
        else:
            frames = render_trajectory_map(sample, map_mode).frames
        z = codec.encode(frames, role="trajectory_latent").data
        return torch.tensor(z[None], dtype=torch.float32)

    def generate(self, sample: VideoSample, steps: int | None = None, seed: int = 0,
                 map_mode: str = "sparse", boxes_override: np.ndarray | None = None,
                 use_slow: bool = False) -> tuple[np.ndarray, float]:
        """Trajectory-conditioned generation; returns (video, wall seconds)."""
        steps = self.default_steps if steps is None else steps
        if use_slow:
            model, adapter = self.slow_generator, self.slow_adapter
            if model is None:
                raise ValueError("bundle has no slow generator")
        else:
            model, adapter = self.generator, self.adapter
        cond = self.conditioning(sample)
        z = self.trajectory_latent(sample, map_mode, boxes_override) \
            if adapter is not None else None
        gen = torch.Generator().manual_seed(seed)
        t0 = time.perf_counter()
        with torch.no_grad():
            latent = rollout(model, cond, self.schedule, steps, batch_size=1,
                             adapter=adapter, z_traj=z, generator=gen)
        video = np.clip(codec.decode(latent[0].cpu().numpy()), 0.0, 1.0)
        return video, time.perf_counter() - t0


class OracleBundle:
    """Replays ground-truth videos; perfect-model baseline for harness checks."""

    default_steps = 4
    hashes: dict = {}

    def generate(self, sample: VideoSample, steps: int | None = None, seed: int = 0,
                 map_mode: str = "sparse", boxes_override=None, use_slow=False):
        return sample.frames.copy(), 0.0

    def info(self) -> dict:
        return {"oracle": True}


def write_bundle(bundle_dir: str | Path, generator: str,
                 adapter: str | None = None, slow_generator: str | None = None,
                 slow_adapter: str | None = None, default_steps: int = 4) -> Path:
    bundle_dir = Path(bundle_dir)
    bundle_dir.mkdir(parents=True, exist_ok=True)
    meta = {"generator": generator, "default_steps": default_steps}
    if adapter:
        meta["adapter"] = adapter
    if slow_generator:
        meta["slow_generator"] = slow_generator
    if slow_adapter:
        meta["slow_adapter"] = slow_adapter
    path = bundle_dir / "bundle.json"
    path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path


@dataclass
class BenchReport:
    rows: list[dict]
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"schema_version": 1, "rows": self.rows,
                           "metadata": self.metadata}, indent=2, sort_keys=True)

    def to_markdown(self) -> str:
        header = ("| objects | n | toy-FD | Mask_IoU | Box_IoU | sharpness "
                  "| time/sample (s) |")
        sep = "|---|---|---|---|---|---|---|"
        lines = [header, sep]
        for r in self.rows:
            fd = f"{r['toy_fd']:.4f}" if r["toy_fd"] is not None else "n/a"
            lines.append(
                f"| {r['object_count']} | {r['n_samples']} | {fd} "
                f"| {r['mask_iou']:.4f} | {r['box_iou']:.4f} "
                f"| {r['sharpness']:.4f} | {r['wall_time_per_sample_s']:.3f} |"
            )
        return "\n".join(lines) + "\n"


def run_benchmark(bundle, set_dir: str | Path, steps: int = 4,
                  seed: int = 0, map_mode: str = "sparse") -> BenchReport:
    """Per-object-count-group metrics over a benchmark dataset directory."""
    samples, groups = read_dataset(set_dir)
    by_group: dict[int, list[VideoSample]] = {}
    for s, g in zip(samples, groups):
        by_group.setdefault(int(g) if g is not None else s.num_objects, []).append(s)

    rows = []
    for count in sorted(by_group):
        group_samples = by_group[count]
        mask_ious, box_ious, sharps, walls = [], [], [], []
        generated, real = [], []
        for i, sample in enumerate(group_samples):
            video, wall = bundle.generate(sample, steps=steps,
                                          seed=seed * 100003 + i, map_mode=map_mode)
            seg = metrics.segment_generated(video, sample.palette, sample.background)
            mask_ious.append(metrics.mask_iou(seg, sample.masks))
            box_ious.append(metrics.box_iou(boxes_from_masks(seg), sample.boxes))
            sharps.append(metrics.sharpness(video))
            walls.append(wall)
            generated.append(video)
            real.append(sample.frames)
        toy_fd = None
        if len(group_samples) >= 16:
            toy_fd = metrics.toy_frechet(np.stack(generated), np.stack(real))
        rows.append({
            "object_count": count,
            "n_samples": len(group_samples),
            "mask_iou": float(np.mean(mask_ious)),
            "box_iou": float(np.mean(box_ious)),
            "toy_fd": toy_fd,
            "sharpness": float(np.mean(sharps)),
            "wall_time_per_sample_s": float(np.mean(walls)),
        })
    metadata = {"steps": steps, "seed": seed, "map_mode": map_mode,
                "bundle": bundle.info()}
    return BenchReport(rows=rows, metadata=metadata)
