"""Three-stage training pipeline.

Stage 0 pretrains the multi-step teacher by plain denoising. Stage 1 trains a
trajectory adapter against the frozen teacher, dense maps first, sparse maps
after. Stage 2 distills the teacher into a 4-step student with distribution
matching. Stage 3 fine-tunes the adapter on the student with the hybrid
adversarial + diffusion objective under the dynamic loss scale.

All randomness flows from one torch.Generator per run; trainer state
(parameters, optimizer moments, RNG) round-trips through the checkpoint
container so an interrupted run resumes bit-identically in 64-bit mode.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from . import codec
from .adapter import TrajectoryAdapter, build_adapter, guided_predict_x0
from .checkpoint import load_checkpoint, param_hash, save_checkpoint
from .denoiser import Conditioning, Denoiser, DenoiserConfig, build_denoiser, clone_params, freeze
from .discriminator import DiffusionDiscriminator, build_discriminator, d_loss, g_adv_loss
from .model_io import (load_adapter, load_denoiser, save_adapter, save_denoiser,
                       save_discriminator)
from .sampling import rollout
from .schedule import NoiseSchedule, forward_diffuse, score_from_x0
from .synth import VideoSample, render_trajectory_map

LAMBDA_SLOPE = 2.5e-4
LAMBDA_INTERCEPT = 0.1
DIVERGENCE_LIMIT = 1e3


class TrainingDivergedError(RuntimeError):
    pass


class MissingCheckpointError(FileNotFoundError):
    pass


def lambda_schedule(step: int, slope: float = LAMBDA_SLOPE,
                    intercept: float = LAMBDA_INTERCEPT) -> float:
    """Dynamic diffusion-loss scale: (1/4)*1e-3*step + 0.1."""
    if step < 0:
        raise ValueError("step must be >= 0")
    return slope * step + intercept


@dataclass
class StageConfig:
    stage: int
    steps: int
    batch_size: int = 4
    lr: float = 1e-4
    lr_aux: float = 1e-4
    update_ratio: int = 5
    dense_steps: int | None = None  # stage 1; remainder uses sparse maps
    lambda_slope: float = LAMBDA_SLOPE
    lambda_intercept: float = LAMBDA_INTERCEPT
    fixed_lambda: float | None = None
    no_gan: bool = False
    no_diffusion: bool = False
    rollout_mode: str = "single_call"  # | "full_rollout"
    t_uniform: bool = False
    map_mode: str = "sparse"
    adapter_kind: str = "resnet"
    adapter_sees_xt: bool = False
    resnet_channels: int = 16
    disc_variant: str = "full"
    disc_layer_ids: list[int] | None = None
    dmd_weight_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.steps <= 0:
            raise ValueError("steps must be > 0")
        if self.update_ratio < 1:
            raise ValueError("update_ratio must be a positive integer")
        if self.rollout_mode not in ("single_call", "full_rollout"):
            raise ValueError(f"unknown rollout_mode {self.rollout_mode!r}")
        if self.stage == 1:
            if self.dense_steps is None:
                self.dense_steps = self.steps // 2
            if not 0 <= self.dense_steps <= self.steps:
                raise ValueError("dense_steps must lie in [0, steps]")

    @property
    def sparse_steps(self) -> int:
        return self.steps - (self.dense_steps or 0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "StageConfig":
        return cls(**d)


class EncodedDataset:
    """Pre-encoded latents + conditioning tensors for a list of samples."""

    def __init__(self, samples: list[VideoSample], dtype: torch.dtype = torch.float32):
        if not samples:
            raise ValueError("empty dataset")
        x0, zd, zs, caps = [], [], [], []
        for s in samples:
            x0.append(codec.encode(s.frames).data)
            zd.append(codec.encode(render_trajectory_map(s, "dense").frames,
                                   role="trajectory_latent").data)
            zs.append(codec.encode(render_trajectory_map(s, "sparse").frames,
                                   role="trajectory_latent").data)
            caps.append(s.caption_tokens)
        self.x0 = torch.tensor(np.stack(x0), dtype=dtype)
        self.z_dense = torch.tensor(np.stack(zd), dtype=dtype)
        self.z_sparse = torch.tensor(np.stack(zs), dtype=dtype)
        self.captions = torch.tensor(caps, dtype=torch.long)
        self.first_frame = self.x0[:, 0].clone()

    def __len__(self) -> int:
        return self.x0.shape[0]

    def batch(self, idx: torch.Tensor):
        cond = Conditioning(caption_tokens=self.captions[idx],
                            first_frame=self.first_frame[idx])
        return self.x0[idx], self.z_dense[idx], self.z_sparse[idx], cond

    def draw(self, batch_size: int, gen: torch.Generator) -> torch.Tensor:
        return torch.randint(len(self), (batch_size,), generator=gen)


def _uniform_t(batch_size: int, T: int, gen: torch.Generator) -> torch.Tensor:
    return torch.randint(1, T + 1, (batch_size,), generator=gen)


def _grid_t(batch_size: int, grid: tuple[int, ...], gen: torch.Generator) -> torch.Tensor:
    picks = torch.randint(len(grid), (batch_size,), generator=gen)
    return torch.tensor(grid, dtype=torch.long)[picks]


def _check_finite(loss: torch.Tensor, trainer: "_Trainer", what: str):
    v = float(loss.detach())
    if not np.isfinite(v) or abs(v) > DIVERGENCE_LIMIT:
        trainer.dump_diagnostics(what, v)
        raise TrainingDivergedError(f"{what} loss diverged at step {trainer.step_idx}: {v}")


class _Trainer:
    """Shared state handling: models, optimizers, RNG, loss log, (de)serialization."""

    def __init__(self, cfg: StageConfig, dtype: torch.dtype = torch.float32,
                 out_dir: str | Path | None = None):
        self.cfg = cfg
        self.dtype = dtype
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.models: dict[str, nn.Module] = {}
        self.opts: dict[str, torch.optim.Optimizer] = {}
        self.gen = torch.Generator().manual_seed(cfg.seed)
        self.step_idx = 0
        self.loss_log: list[dict] = []

    def _log(self, row: dict) -> dict:
        row = {"step": self.step_idx, **row}
        if self.step_idx % 100 == 0:
            row["role_hashes"] = {name: param_hash(m) for name, m in self.models.items()}
        self.loss_log.append(row)
        return row

    def dump_diagnostics(self, what: str, value: float):
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            (self.out_dir / "diverged.json").write_text(json.dumps(
                {"what": what, "value": value, "step": self.step_idx,
                 "recent_log": self.loss_log[-20:]}, indent=2))

    def write_log(self, name: str = "log.jsonl"):
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            with open(self.out_dir / name, "w") as f:
                for row in self.loss_log:
                    f.write(json.dumps(row) + "\n")

    def step(self) -> dict:
        raise NotImplementedError

    def run(self, num_steps: int | None = None):
        target = self.cfg.steps if num_steps is None else self.step_idx + num_steps
        while self.step_idx < target:
            self.step()
        return self

    # -- state round trip ---------------------------------------------------

    def save_state(self, path: str | Path):
        tensors: dict[str, object] = {"rng.torch": self.gen.get_state()}
        for name, m in self.models.items():
            for k, v in m.state_dict().items():
                tensors[f"model.{name}.{k}"] = v
        for name, opt in self.opts.items():
            buf = io.BytesIO()
            torch.save(opt.state_dict(), buf)
            tensors[f"opt.{name}"] = np.frombuffer(buf.getvalue(), dtype=np.uint8)
        header = {"kind": "train_state", "step": self.step_idx,
                  "config": self.cfg.to_dict(), "loss_log": self.loss_log}
        save_checkpoint(path, header, tensors)

    def load_state(self, path: str | Path):
        header, tensors = load_checkpoint(path)
        self.step_idx = header["step"]
        self.loss_log = list(header["loss_log"])
        self.gen.set_state(torch.from_numpy(tensors.pop("rng.torch")))
        for name, m in self.models.items():
            ref = m.state_dict()
            state = {}
            for k, v in ref.items():
                state[k] = torch.from_numpy(tensors[f"model.{name}.{k}"]).to(v.dtype)
            m.load_state_dict(state)
        for name, opt in self.opts.items():
            buf = io.BytesIO(tensors[f"opt.{name}"].tobytes())
            opt.load_state_dict(torch.load(buf, weights_only=False))
        return self


class Stage0Trainer(_Trainer):
    """Plain denoising pretraining of the teacher (no adapter)."""

    def __init__(self, dataset: EncodedDataset, cfg: StageConfig,
                 model_config: DenoiserConfig, schedule: NoiseSchedule,
                 dtype: torch.dtype = torch.float32, out_dir=None):
        super().__init__(cfg, dtype=dtype, out_dir=out_dir)
        self.dataset = dataset
        self.schedule = schedule
        model = build_denoiser(model_config, seed=cfg.seed).to(dtype)
        self.models["teacher"] = model
        self.opts["teacher"] = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    def step(self) -> dict:
        cfg = self.cfg
        x0, _, _, cond = self.dataset.batch(self.dataset.draw(cfg.batch_size, self.gen))
        t = _uniform_t(cfg.batch_size, self.schedule.T, self.gen)
        eps = torch.randn(x0.shape, generator=self.gen, dtype=self.dtype)
        x_t = forward_diffuse(x0, t, eps, self.schedule)
        pred = self.models["teacher"](x_t, t, cond)
        loss = F.mse_loss(pred, x0)
        _check_finite(loss, self, "denoise")
        self.opts["teacher"].zero_grad()
        loss.backward()
        self.opts["teacher"].step()
        row = self._log({"loss": float(loss.detach())})
        self.step_idx += 1
        return row


class Stage1Trainer(_Trainer):
    """Adapter training against the frozen teacher, dense-to-sparse."""

    def __init__(self, teacher: Denoiser, dataset: EncodedDataset, cfg: StageConfig,
                 schedule: NoiseSchedule, dtype: torch.dtype = torch.float32, out_dir=None):
        super().__init__(cfg, dtype=dtype, out_dir=out_dir)
        self.dataset = dataset
        self.schedule = schedule
        self.teacher = freeze(teacher.to(dtype))
        adapter = build_adapter(cfg.adapter_kind, teacher.config,
                                generator=teacher, seed=cfg.seed + 1,
                                resnet_channels=cfg.resnet_channels,
                                sees_xt=cfg.adapter_sees_xt).to(dtype)
        self.models["adapter"] = adapter
        self.opts["adapter"] = torch.optim.Adam(adapter.parameters(), lr=cfg.lr)

    def current_mode(self) -> str:
        return "dense" if self.step_idx < (self.cfg.dense_steps or 0) else "sparse"

    def step(self) -> dict:
        cfg = self.cfg
        mode = self.current_mode()
        x0, zd, zs, cond = self.dataset.batch(self.dataset.draw(cfg.batch_size, self.gen))
        z = zd if mode == "dense" else zs
        t = _uniform_t(cfg.batch_size, self.schedule.T, self.gen)
        eps = torch.randn(x0.shape, generator=self.gen, dtype=self.dtype)
        x_t = forward_diffuse(x0, t, eps, self.schedule)
        pred = guided_predict_x0(self.teacher, self.models["adapter"], x_t, t, z, cond)
        loss = F.mse_loss(pred, x0)
        _check_finite(loss, self, "stage1")
        self.opts["adapter"].zero_grad()
        loss.backward()
        self.opts["adapter"].step()
        row = self._log({"loss": float(loss.detach()), "mode": mode})
        self.step_idx += 1
        return row


class Stage2Trainer(_Trainer):
    """DMD distillation of the teacher into a few-step student."""

    def __init__(self, teacher: Denoiser, dataset: EncodedDataset, cfg: StageConfig,
                 schedule: NoiseSchedule, dtype: torch.dtype = torch.float32, out_dir=None):
        super().__init__(cfg, dtype=dtype, out_dir=out_dir)
        self.dataset = dataset
        self.schedule = schedule
        teacher = teacher.to(dtype)
        self.models["student"] = clone_params(teacher)
        self.models["mu_fake"] = clone_params(teacher)
        self.models["mu_real"] = freeze(clone_params(teacher))
        self.opts["student"] = torch.optim.Adam(self.models["student"].parameters(), lr=cfg.lr)
        self.opts["mu_fake"] = torch.optim.Adam(self.models["mu_fake"].parameters(), lr=cfg.lr_aux)
        self.gen_updates = 0
        self.fake_updates = 0
        self._cached_fake: torch.Tensor | None = None
        self._cached_cond: Conditioning | None = None

    def _rollout(self, cond: Conditioning, with_grad: bool) -> torch.Tensor:
        noise = torch.randn((self.cfg.batch_size,) + tuple(self.dataset.x0.shape[1:]),
                            generator=self.gen, dtype=self.dtype)
        if with_grad:
            return rollout(self.models["student"], cond, self.schedule, 4,
                           self.cfg.batch_size, noise=noise, dtype=self.dtype)
        with torch.no_grad():
            return rollout(self.models["student"], cond, self.schedule, 4,
                           self.cfg.batch_size, noise=noise, dtype=self.dtype)

    def generator_step(self) -> dict:
        cfg = self.cfg
        _, _, _, cond = self.dataset.batch(self.dataset.draw(cfg.batch_size, self.gen))
        x0 = self._rollout(cond, with_grad=True)
        t = _uniform_t(cfg.batch_size, self.schedule.T, self.gen)
        eps = torch.randn(x0.shape, generator=self.gen, dtype=self.dtype)
        with torch.no_grad():
            x_t = forward_diffuse(x0.detach(), t, eps, self.schedule)
            x0_real_hat = self.models["mu_real"](x_t, t, cond)
            x0_fake_hat = self.models["mu_fake"](x_t, t, cond)
            s_real = score_from_x0(x_t, t, x0_real_hat, self.schedule)
            s_fake = score_from_x0(x_t, t, x0_fake_hat, self.schedule)
            a, s = self.schedule.coeffs(t, dtype=self.dtype)
            dims = tuple(range(1, x0.ndim))
            norm = (x0_real_hat - x0.detach()).abs().mean(dim=dims, keepdim=True)
            w = (s ** 2 / a).view(-1, *([1] * (x0.ndim - 1)))
            w = cfg.dmd_weight_scale * w / norm.clamp_min(1e-8)
            target = x0.detach() - w * (s_fake - s_real)
        loss = 0.5 * F.mse_loss(x0, target)
        _check_finite(loss, self, "dmd_gen")
        self.opts["student"].zero_grad()
        loss.backward()
        self.opts["student"].step()
        self.gen_updates += 1
        # reuse this rollout (detached) for the following fake-score updates
        self._cached_fake = x0.detach()
        self._cached_cond = cond
        return {"dmd_loss": float(loss.detach())}

    def fake_score_step(self) -> dict:
        cfg = self.cfg
        if self._cached_fake is None:
            _, _, _, cond = self.dataset.batch(self.dataset.draw(cfg.batch_size, self.gen))
            self._cached_fake = self._rollout(cond, with_grad=False)
            self._cached_cond = cond
        x0, cond = self._cached_fake, self._cached_cond
        t = _uniform_t(cfg.batch_size, self.schedule.T, self.gen)
        eps = torch.randn(x0.shape, generator=self.gen, dtype=self.dtype)
        x_t = forward_diffuse(x0, t, eps, self.schedule)
        pred = self.models["mu_fake"](x_t, t, cond)
        loss = F.mse_loss(pred, x0)
        _check_finite(loss, self, "fake_score")
        self.opts["mu_fake"].zero_grad()
        loss.backward()
        self.opts["mu_fake"].step()
        self.fake_updates += 1
        return {"fake_score_loss": float(loss.detach())}

    def step(self) -> dict:
        # the generator slot sits mid-period so truncated runs keep the
        # aux:gen counter ratio within the documented +/-4 slack
        period = 1 + self.cfg.update_ratio
        if self.step_idx % period == period // 2:
            row = self._log(self.generator_step())
        else:
            row = self._log(self.fake_score_step())
        self.step_idx += 1
        return row


class Stage3Trainer(_Trainer):
    """Hybrid adversarial + diffusion fine-tuning of the adapter on the student."""

    def __init__(self, student: Denoiser, adapter: TrajectoryAdapter,
                 dataset: EncodedDataset, cfg: StageConfig, schedule: NoiseSchedule,
                 disc_backbone: Denoiser | None = None,
                 dtype: torch.dtype = torch.float32, out_dir=None):
        super().__init__(cfg, dtype=dtype, out_dir=out_dir)
        self.dataset = dataset
        self.schedule = schedule
        self.student = freeze(student.to(dtype))
        self.models["adapter"] = adapter.to(dtype)
        self.opts["adapter"] = torch.optim.Adam(adapter.parameters(), lr=cfg.lr)
        backbone = freeze((disc_backbone or clone_params(student)).to(dtype))
        disc = build_discriminator(backbone, layer_ids=cfg.disc_layer_ids,
                                   variant=cfg.disc_variant, seed=cfg.seed + 2).to(dtype)
        self.models["disc"] = disc
        self.opts["disc"] = torch.optim.Adam(disc.classifier_parameters(), lr=cfg.lr_aux)
        self.adapter_updates = 0
        self.disc_updates = 0

    def _z(self, zd, zs):
        return zd if self.cfg.map_mode == "dense" else zs

    def _gen_t(self, batch_size: int) -> torch.Tensor:
        if self.cfg.t_uniform:
            return _uniform_t(batch_size, self.schedule.T, self.gen)
        return _grid_t(batch_size, self.schedule.fewstep_grid, self.gen)

    def _fake_x0(self, x0_real, z, cond, with_grad: bool) -> torch.Tensor:
        adapter = self.models["adapter"]
        ctx = torch.enable_grad() if with_grad else torch.no_grad()
        with ctx:
            if self.cfg.rollout_mode == "full_rollout":
                noise = torch.randn(x0_real.shape, generator=self.gen, dtype=self.dtype)
                return rollout(self.student, cond, self.schedule, 4, x0_real.shape[0],
                               adapter=adapter, z_traj=z, noise=noise, dtype=self.dtype)
            t = self._gen_t(x0_real.shape[0])
            eps = torch.randn(x0_real.shape, generator=self.gen, dtype=self.dtype)
            x_t = forward_diffuse(x0_real, t, eps, self.schedule)
            return guided_predict_x0(self.student, adapter, x_t, t, z, cond)

    def current_lambda(self) -> float:
        if self.cfg.fixed_lambda is not None:
            return self.cfg.fixed_lambda
        return lambda_schedule(self.adapter_updates, self.cfg.lambda_slope,
                               self.cfg.lambda_intercept)

    def adapter_step(self) -> dict:
        cfg = self.cfg
        x0, zd, zs, cond = self.dataset.batch(self.dataset.draw(cfg.batch_size, self.gen))
        z = self._z(zd, zs)
        x0_fake = self._fake_x0(x0, z, cond, with_grad=True)
        l_diff = F.mse_loss(x0_fake, x0)
        lam = self.current_lambda()
        if cfg.no_gan:
            l_g = torch.zeros((), dtype=self.dtype)
            total = lam * l_diff
        else:
            t_d = _uniform_t(cfg.batch_size, self.schedule.T, self.gen)
            eps_d = torch.randn(x0.shape, generator=self.gen, dtype=self.dtype)
            x_t_fake = forward_diffuse(x0_fake, t_d, eps_d, self.schedule)
            logit_fake = self.models["disc"](x_t_fake, t_d, cond, z_traj=z)
            l_g = g_adv_loss(logit_fake)
            total = l_g if cfg.no_diffusion else l_g + lam * l_diff
        _check_finite(total, self, "stage3_adapter")
        self.opts["adapter"].zero_grad()
        total.backward()
        self.opts["adapter"].step()
        self.adapter_updates += 1
        return {"l_g": float(l_g.detach()), "l_diff": float(l_diff.detach()), "lambda": lam,
                "total": float(total.detach()), "role": "adapter"}

    def disc_step(self) -> dict:
        cfg = self.cfg
        x0, zd, zs, cond = self.dataset.batch(self.dataset.draw(cfg.batch_size, self.gen))
        z = self._z(zd, zs)
        x0_fake = self._fake_x0(x0, z, cond, with_grad=False)
        t_d = _uniform_t(cfg.batch_size, self.schedule.T, self.gen)
        eps_r = torch.randn(x0.shape, generator=self.gen, dtype=self.dtype)
        eps_f = torch.randn(x0.shape, generator=self.gen, dtype=self.dtype)
        x_t_real = forward_diffuse(x0, t_d, eps_r, self.schedule)
        x_t_fake = forward_diffuse(x0_fake, t_d, eps_f, self.schedule)
        disc = self.models["disc"]
        logit_real = disc(x_t_real, t_d, cond, z_traj=z)
        logit_fake = disc(x_t_fake, t_d, cond, z_traj=z)
        loss = d_loss(logit_real, logit_fake)
        _check_finite(loss, self, "stage3_disc")
        self.opts["disc"].zero_grad()
        loss.backward()
        self.opts["disc"].step()
        self.disc_updates += 1
        return {"d_loss": float(loss.detach()), "role": "disc"}

    def step(self) -> dict:
        if self.cfg.no_gan:
            row = self._log(self.adapter_step())
            self.step_idx += 1
            return row
        period = 1 + self.cfg.update_ratio
        if self.step_idx % period == period // 2:
            row = self._log(self.adapter_step())
        else:
            row = self._log(self.disc_step())
        self.step_idx += 1
        return row


# ---------------------------------------------------------------------------
# stage entry points operating on checkpoints

def _require(path: str | Path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise MissingCheckpointError(f"missing {what} checkpoint: {path}")
    return path


def stage0_pretrain(samples: list[VideoSample], cfg: StageConfig,
                    model_config: DenoiserConfig, schedule: NoiseSchedule,
                    out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    trainer = Stage0Trainer(EncodedDataset(samples), cfg, model_config, schedule,
                            out_dir=out_dir)
    trainer.run()
    trainer.write_log("stage0_log.jsonl")
    path = out_dir / "teacher.ckpt"
    save_denoiser(path, trainer.models["teacher"], schedule, role="teacher",
                  step=trainer.step_idx)
    return path


def stage1_train(teacher_path: str | Path, samples: list[VideoSample],
                 cfg: StageConfig, out_dir: str | Path) -> Path:
    teacher, schedule, _ = load_denoiser(_require(teacher_path, "teacher"))
    out_dir = Path(out_dir)
    trainer = Stage1Trainer(teacher, EncodedDataset(samples), cfg, schedule,
                            out_dir=out_dir)
    trainer.run()
    trainer.write_log("stage1_log.jsonl")
    path = out_dir / "slow_adapter.ckpt"
    save_adapter(path, trainer.models["adapter"], step=trainer.step_idx,
                 extra={"teacher_hash": param_hash(teacher)})
    return path


def stage2_distill(teacher_path: str | Path, samples: list[VideoSample],
                   cfg: StageConfig, out_dir: str | Path) -> Path:
    teacher, schedule, _ = load_denoiser(_require(teacher_path, "teacher"))
    out_dir = Path(out_dir)
    trainer = Stage2Trainer(teacher, EncodedDataset(samples), cfg, schedule,
                            out_dir=out_dir)
    trainer.run()
    trainer.write_log("stage2_log.jsonl")
    path = out_dir / "student.ckpt"
    save_denoiser(path, trainer.models["student"], schedule, role="student",
                  step=trainer.step_idx,
                  extra={"gen_updates": trainer.gen_updates,
                         "fake_updates": trainer.fake_updates,
                         "mu_real_hash": param_hash(trainer.models["mu_real"])})
    return path


def stage3_finetune(student_path: str | Path, slow_adapter_path: str | Path,
                    samples: list[VideoSample], cfg: StageConfig,
                    out_dir: str | Path,
                    disc_backbone_path: str | Path | None = None
                    ) -> tuple[Path, Path]:
    student, schedule, _ = load_denoiser(_require(student_path, "student"))
    adapter, _ = load_adapter(_require(slow_adapter_path, "slow adapter"),
                              generator=student)
    backbone = None
    if disc_backbone_path is not None:
        backbone, _, _ = load_denoiser(_require(disc_backbone_path, "discriminator backbone"))
    out_dir = Path(out_dir)
    trainer = Stage3Trainer(student, adapter, EncodedDataset(samples), cfg, schedule,
                            disc_backbone=backbone, out_dir=out_dir)
    trainer.run()
    trainer.write_log("stage3_log.jsonl")
    adapter_path = out_dir / "fast_adapter.ckpt"
    save_adapter(adapter_path, trainer.models["adapter"], step=trainer.step_idx,
                 extra={"student_hash": param_hash(student)})
    disc_path = out_dir / "discriminator.ckpt"
    save_discriminator(disc_path, trainer.models["disc"], step=trainer.step_idx,
                       extra={"adapter_updates": trainer.adapter_updates,
                              "disc_updates": trainer.disc_updates})
    return adapter_path, disc_path
