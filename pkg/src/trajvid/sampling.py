"""Deterministic DDIM-style samplers for multi-step and few-step inference."""

from __future__ import annotations

import time
from typing import Callable

import numpy as np
import torch

from . import codec
from .adapter import TrajectoryAdapter
from .denoiser import Denoiser, Conditioning
from .schedule import NoiseSchedule


def sample_latent(predict_fn: Callable, shape: tuple, steps: int,
                  schedule: NoiseSchedule, generator: torch.Generator | None = None,
                  noise: torch.Tensor | None = None,
                  dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Map pure noise to a clean latent with a `steps`-step DDIM update.

    x_{t'} = alpha_{t'} * x0_hat + sigma_{t'} * (x_t - alpha_t * x0_hat) / sigma_t
    """
    grid = schedule.step_grid(steps)
    if noise is None:
        noise = torch.randn(shape, generator=generator, dtype=dtype)
    x = noise
    for i, t in enumerate(grid):
        x0_hat = predict_fn(x, t)
        t_next = grid[i + 1] if i + 1 < len(grid) else 0
        a, s = schedule.coeffs(t, dtype=x.dtype)
        a_n, s_n = schedule.coeffs(t_next, dtype=x.dtype)
        x = a_n * x0_hat + s_n * (x - a * x0_hat) / s
    return x


def rollout(model: Denoiser, cond: Conditioning, schedule: NoiseSchedule,
            steps: int, batch_size: int, adapter: TrajectoryAdapter | None = None,
            z_traj: torch.Tensor | None = None,
            generator: torch.Generator | None = None,
            noise: torch.Tensor | None = None,
            dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Few/multi-step latent generation, optionally with trajectory guidance."""
    if adapter is not None and z_traj is None:
        raise ValueError("adapter requires z_traj")
    cfg = model.config
    shape = (batch_size, cfg.latent_frames, cfg.latent_height,
             cfg.latent_width, cfg.latent_channels)

    def predict(x, t):
        if adapter is None:
            return model(x, t, cond)
        residuals = adapter(z_traj, t, x_t=x if adapter.sees_xt else None)
        return model(x, t, cond, residuals=residuals)

    return sample_latent(predict, shape, steps, schedule, generator=generator,
                         noise=noise, dtype=dtype)


def sample_video(model: Denoiser, cond: Conditioning, schedule: NoiseSchedule,
                 steps: int, adapter: TrajectoryAdapter | None = None,
                 z_traj: torch.Tensor | None = None, seed: int = 0) -> tuple[np.ndarray, float]:
    """Generate one video; returns (frames [F,H,W,3] float32, wall seconds)."""
    gen = torch.Generator().manual_seed(seed)
    t0 = time.perf_counter()
    with torch.no_grad():
        latent = rollout(model, cond, schedule, steps, batch_size=1,
                         adapter=adapter, z_traj=z_traj, generator=gen)
    video = codec.decode(latent[0].cpu().numpy())
    wall = time.perf_counter() - t0
    return np.clip(video, 0.0, 1.0), wall
