"""Read/write models through the single-file checkpoint container."""

from __future__ import annotations

from pathlib import Path

from .adapter import TrajectoryAdapter, build_adapter
from .checkpoint import (CheckpointError, load_checkpoint, load_state_into,
                         param_hash, save_checkpoint)
from .denoiser import Denoiser, DenoiserConfig, build_denoiser
from .discriminator import DiffusionDiscriminator, build_discriminator
from .schedule import NoiseSchedule


def schedule_header(schedule: NoiseSchedule) -> dict:
    return {"T": schedule.T, "fewstep_grid": list(schedule.fewstep_grid)}


def schedule_from_header(h: dict) -> NoiseSchedule:
    return NoiseSchedule(T=h["T"], fewstep_grid=tuple(h["fewstep_grid"]))


def save_denoiser(path: str | Path, model: Denoiser, schedule: NoiseSchedule,
                  role: str = "teacher", step: int = 0, extra: dict | None = None) -> None:
    header = {
        "kind": "denoiser",
        "config": model.config.to_dict(),
        "schedule": schedule_header(schedule),
        "role": role,
        "step": step,
        "param_hash": param_hash(model),
    }
    header.update(extra or {})
    save_checkpoint(path, header, dict(model.state_dict()))


def load_denoiser(path: str | Path) -> tuple[Denoiser, NoiseSchedule, dict]:
    header, tensors = load_checkpoint(path)
    if header.get("kind") != "denoiser":
        raise CheckpointError(f"{path}: not a denoiser checkpoint")
    model = build_denoiser(DenoiserConfig.from_dict(header["config"]))
    load_state_into(model, tensors)
    return model, schedule_from_header(header["schedule"]), header


def save_adapter(path: str | Path, adapter: TrajectoryAdapter, step: int = 0,
                 extra: dict | None = None) -> None:
    header = {
        "kind": "adapter",
        "adapter_kind": adapter.kind,
        "generator_config": adapter.gen_config.to_dict(),
        "sees_xt": adapter.sees_xt,
        "step": step,
        "param_hash": param_hash(adapter),
    }
    if adapter.kind == "resnet":
        header["resnet_channels"] = adapter.stem.out_channels
    header.update(extra or {})
    save_checkpoint(path, header, dict(adapter.state_dict()))


def load_adapter(path: str | Path, generator: Denoiser | None = None
                 ) -> tuple[TrajectoryAdapter, dict]:
    header, tensors = load_checkpoint(path)
    if header.get("kind") != "adapter":
        raise CheckpointError(f"{path}: not an adapter checkpoint")
    gen_config = DenoiserConfig.from_dict(header["generator_config"])
    if header["adapter_kind"] == "controlnet" and generator is None:
        # weights are fully restored below; a throwaway donor satisfies the builder
        generator = build_denoiser(gen_config)
    adapter = build_adapter(header["adapter_kind"], gen_config, generator=generator,
                            resnet_channels=header.get("resnet_channels", 16),
                            sees_xt=header.get("sees_xt", False))
    load_state_into(adapter, tensors)
    return adapter, header


def save_discriminator(path: str | Path, disc: DiffusionDiscriminator,
                       step: int = 0, extra: dict | None = None) -> None:
    """Classifier weights only; the backbone is referenced by hash."""
    tensors = {k: v for k, v in disc.state_dict().items()
               if not k.startswith("backbone.")}
    header = {
        "kind": "discriminator",
        "variant": disc.variant,
        "layer_ids": disc.layer_ids,
        "backbone_hash": param_hash(disc.backbone),
        "backbone_config": disc.backbone.config.to_dict(),
        "step": step,
    }
    header.update(extra or {})
    save_checkpoint(path, header, tensors)


def load_discriminator(path: str | Path, backbone: Denoiser) -> tuple[DiffusionDiscriminator, dict]:
    header, tensors = load_checkpoint(path)
    if header.get("kind") != "discriminator":
        raise CheckpointError(f"{path}: not a discriminator checkpoint")
    disc = build_discriminator(backbone, layer_ids=header["layer_ids"],
                               variant=header["variant"])
    full = {f"backbone.{k}": v.detach().cpu().numpy()
            for k, v in backbone.state_dict().items()}
    full.update(tensors)
    load_state_into(disc, full)
    return disc, header
