"""Cosine variance-preserving noise schedule and forward-diffusion machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

DEFAULT_T = 1000
DEFAULT_FEWSTEP_GRID = (1000, 750, 500, 250)


class ScoreSingularityError(ValueError):
    """score_from_x0 at t=0, where sigma_0 = 0."""


@dataclass
class NoiseSchedule:
    """alpha_t = cos((t/T) * pi/2), sigma_t = sin((t/T) * pi/2), t in 0..T."""

    T: int = DEFAULT_T
    fewstep_grid: tuple[int, ...] = DEFAULT_FEWSTEP_GRID
    alpha: torch.Tensor = field(init=False)
    sigma: torch.Tensor = field(init=False)

    def __post_init__(self):
        ts = torch.arange(self.T + 1, dtype=torch.float64)
        self.alpha = torch.cos(ts / self.T * math.pi / 2)
        self.sigma = torch.sin(ts / self.T * math.pi / 2)
        self.alpha[0], self.sigma[0] = 1.0, 0.0
        grid = tuple(int(t) for t in self.fewstep_grid)
        if list(grid) != sorted(grid, reverse=True) or len(set(grid)) != len(grid):
            raise ValueError("fewstep_grid must be strictly decreasing")
        if any(t < 1 or t > self.T for t in grid):
            raise ValueError("fewstep_grid timesteps must lie in 1..T")
        self.fewstep_grid = grid

    def coeffs(self, t, dtype=torch.float32):
        """(alpha_t, sigma_t) as tensors of the requested dtype."""
        t = torch.as_tensor(t, dtype=torch.long)
        if torch.any(t < 0) or torch.any(t > self.T):
            raise ValueError(f"timestep out of range [0, {self.T}]")
        return self.alpha[t].to(dtype), self.sigma[t].to(dtype)

    def step_grid(self, steps: int) -> list[int]:
        """Strictly decreasing timestep grid from T for a `steps`-step sampler."""
        if steps < 1:
            raise ValueError("steps must be >= 1")
        if steps == 4:
            return list(self.fewstep_grid)
        return [round(self.T * (steps - i) / steps) for i in range(steps)]


def _bcast(coef: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
    # scalar t broadcasts as-is; batched t aligns to the batch dimension
    if coef.ndim == 0:
        return coef
    return coef.view(-1, *([1] * (x.ndim - 1)))


def forward_diffuse(x0: torch.Tensor, t, eps: torch.Tensor,
                    schedule: NoiseSchedule) -> torch.Tensor:
    """x_t = alpha_t * x0 + sigma_t * eps."""
    if x0.shape != eps.shape:
        raise ValueError(f"shape mismatch: {x0.shape} vs {eps.shape}")
    a, s = schedule.coeffs(t, dtype=x0.dtype)
    return _bcast(a, x0) * x0 + _bcast(s, eps) * eps


def score_from_x0(x_t: torch.Tensor, t, x0_hat: torch.Tensor,
                  schedule: NoiseSchedule) -> torch.Tensor:
    """Gaussian-posterior score identity: s = (alpha_t * x0_hat - x_t) / sigma_t^2."""
    t_arr = torch.as_tensor(t)
    if torch.any(t_arr == 0):
        raise ScoreSingularityError("score undefined at t=0 (sigma_0 = 0)")
    a, s = schedule.coeffs(t, dtype=x_t.dtype)
    return (_bcast(a, x_t) * x0_hat - x_t) / _bcast(s, x_t) ** 2
