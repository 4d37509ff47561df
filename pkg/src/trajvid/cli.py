"""Command line entry points: dataset generation, benchmarks, training, serving."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import click

from .bundle import BenchReport, ModelBundle, run_benchmark
from .denoiser import DenoiserConfig
from .schedule import NoiseSchedule
from .synth import SceneSpec, build_benchmark, generate_scene, write_dataset
from .training import (StageConfig, stage0_pretrain, stage1_train,
                       stage2_distill, stage3_finetune)

ABLATIONS = ("no-gan", "no-diff", "fixed-lambda", "slow-adapter-only")


def _load_json(path: str) -> dict:
    return json.loads(Path(path).read_text())


@click.group()
def main():
    """Trajectory-controllable video generation toolkit."""


@main.group()
def data():
    """Synthetic dataset commands."""


@data.command("gen")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True),
              help="JSON: num_samples, num_objects (int or list), num_frames, "
                   "height, width, seed.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def data_gen(spec_path, out_dir):
    """Generate a dataset of moving-shape videos."""
    cfg = _load_json(spec_path)
    n = int(cfg["num_samples"])
    objs = cfg.get("num_objects", 2)
    objs = objs if isinstance(objs, list) else [objs]
    base_seed = int(cfg.get("seed", 0))
    samples = []
    for i in range(n):
        spec = SceneSpec(num_objects=int(objs[i % len(objs)]),
                         num_frames=int(cfg.get("num_frames", 8)),
                         height=int(cfg.get("height", 32)),
                         width=int(cfg.get("width", 32)),
                         seed=base_seed + i)
        samples.append(generate_scene(spec))
    digest = write_dataset(samples, out_dir)
    click.echo(f"wrote {n} samples to {out_dir} (manifest sha256 {digest[:16]})")


@main.group()
def bench():
    """Benchmark set construction and evaluation."""


@bench.command("build")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def bench_build(config_path, out_dir):
    """Build the grouped benchmark set from a config JSON."""
    digest = build_benchmark(_load_json(config_path), out_dir)
    click.echo(f"benchmark set at {out_dir} (manifest sha256 {digest[:16]})")


@bench.command("run")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--set", "set_dir", required=True, type=click.Path(exists=True))
@click.option("--steps", default=4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Report JSON path; a .md table is written alongside.")
def bench_run(bundle_dir, set_dir, steps, seed, out_path):
    """Evaluate a model bundle on a benchmark set."""
    report = run_benchmark(ModelBundle(bundle_dir), set_dir, steps=steps, seed=seed)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report.to_json())
    out_path.with_suffix(".md").write_text(report.to_markdown())
    click.echo(report.to_markdown())


def _stage_config(config_path: str, stage: int, ablate: str | None,
                  adapter: str | None, disc_variant: str | None) -> StageConfig:
    raw = _load_json(config_path) if config_path else {}
    raw.pop("model", None)
    raw.pop("schedule", None)
    raw.setdefault("stage", stage)
    if raw["stage"] != stage:
        raise click.UsageError(f"config stage {raw['stage']} does not match command")
    cfg = StageConfig.from_dict(raw)
    if adapter:
        cfg.adapter_kind = adapter
    if disc_variant:
        cfg.disc_variant = disc_variant
    if ablate == "no-gan":
        cfg.no_gan = True
    elif ablate == "no-diff":
        cfg.no_diffusion = True
    elif ablate == "fixed-lambda":
        cfg.fixed_lambda = 1.0
    return cfg


def _read_samples(data_dir: str):
    from .synth import read_dataset
    samples, _ = read_dataset(data_dir)
    return samples


@main.group()
def train():
    """Three-stage training pipeline."""


@train.command("stage0")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def train_stage0(config_path, data_dir, out_dir):
    """Pretrain the multi-step teacher denoiser."""
    raw = _load_json(config_path) if config_path else {}
    model_cfg = DenoiserConfig.from_dict(raw.get("model", {}))
    schedule = NoiseSchedule(**raw.get("schedule", {}))
    cfg = _stage_config(config_path, 0, None, None, None)
    path = stage0_pretrain(_read_samples(data_dir), cfg, model_cfg, schedule, out_dir)
    click.echo(f"teacher checkpoint: {path}")


@train.command("stage1")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--teacher", "teacher_path", required=True, type=click.Path(exists=True))
@click.option("--adapter", type=click.Choice(["resnet", "controlnet"]), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def train_stage1(config_path, data_dir, teacher_path, adapter, out_dir):
    """Train the slow trajectory adapter against the frozen teacher."""
    cfg = _stage_config(config_path, 1, None, adapter, None)
    path = stage1_train(teacher_path, _read_samples(data_dir), cfg, out_dir)
    click.echo(f"slow adapter checkpoint: {path}")


@train.command("stage2")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--teacher", "teacher_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def train_stage2(config_path, data_dir, teacher_path, out_dir):
    """Distill the teacher into a few-step student."""
    cfg = _stage_config(config_path, 2, None, None, None)
    path = stage2_distill(teacher_path, _read_samples(data_dir), cfg, out_dir)
    click.echo(f"student checkpoint: {path}")


@train.command("stage3")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--student", "student_path", required=True, type=click.Path(exists=True))
@click.option("--slow-adapter", "slow_adapter_path", required=True,
              type=click.Path(exists=True))
@click.option("--disc-backbone", "disc_backbone_path", type=click.Path(exists=True),
              default=None, help="Denoiser checkpoint for the frozen discriminator "
                                 "backbone; defaults to the student.")
@click.option("--ablate", type=click.Choice(ABLATIONS), default=None)
@click.option("--adapter", type=click.Choice(["resnet", "controlnet"]), default=None)
@click.option("--disc-variant", type=click.Choice(["vc", "ss-vc", "tc-vc", "full"]),
              default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def train_stage3(config_path, data_dir, student_path, slow_adapter_path,
                 disc_backbone_path, ablate, adapter, disc_variant, out_dir):
    """Fine-tune a fast adapter on the few-step student."""
    out_dir = Path(out_dir)
    if ablate == "slow-adapter-only":
        out_dir.mkdir(parents=True, exist_ok=True)
        dest = out_dir / "fast_adapter.ckpt"
        shutil.copyfile(slow_adapter_path, dest)
        click.echo(f"slow adapter reused unchanged: {dest}")
        return
    cfg = _stage_config(config_path, 3, ablate, adapter, disc_variant)
    adapter_path, disc_path = stage3_finetune(
        student_path, slow_adapter_path, _read_samples(data_dir), cfg, out_dir,
        disc_backbone_path=disc_backbone_path)
    click.echo(f"fast adapter checkpoint: {adapter_path}")
    if disc_path is not None:
        click.echo(f"discriminator checkpoint: {disc_path}")


@main.command("serve")
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(bundle_dir, host, port):
    """Run the interactive generation HTTP service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(bundle_dir), host=host, port=port)


if __name__ == "__main__":
    main()
