"""Trajectory adapters: per-block guidance injected through zero-initialized projections.

Two architectures share one contract: given an encoded trajectory map and a
timestep, produce one residual feature map per generator block. Every
injection projection starts at exactly zero, so a freshly built adapter leaves
the generator's output untouched.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .denoiser import Denoiser, DenoiserConfig, Conditioning, TransformerBlock, timestep_embedding

ADAPTER_KINDS = ("resnet", "controlnet")


class _ResUnit(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv3d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv3d(channels, channels, 3, padding=1)
        self.act = nn.GELU()

    def forward(self, x):
        return x + self.conv2(self.act(self.conv1(x)))


class TrajectoryAdapter(nn.Module):
    """Encodes the trajectory latent and emits one residual per generator block."""

    def __init__(self, kind: str, generator_config: DenoiserConfig,
                 generator: Denoiser | None = None, resnet_channels: int = 16,
                 sees_xt: bool = False):
        super().__init__()
        if kind not in ADAPTER_KINDS:
            raise ValueError(f"adapter kind must be one of {ADAPTER_KINDS}")
        if kind == "controlnet" and generator is None:
            raise ValueError("controlnet adapter requires generator params to copy")
        self.kind = kind
        self.gen_config = generator_config
        self.sees_xt = sees_xt
        cfg = generator_config
        d = cfg.hidden_dim

        if kind == "controlnet":
            self.in_proj = nn.Linear(cfg.latent_channels, d)
            self.pos_emb = nn.Parameter(torch.randn(cfg.num_video_tokens, d) * 0.02)
            self.time_mlp = nn.Sequential(nn.Linear(d, d), nn.SiLU(), nn.Linear(d, d))
            self.blocks = nn.ModuleList(
                TransformerBlock(d, cfg.num_heads) for _ in range(cfg.num_blocks)
            )
            self.zero_projs = nn.ModuleList(
                nn.Linear(d, d) for _ in range(cfg.num_blocks)
            )
            self.in_proj.load_state_dict(generator.in_proj.state_dict())
            with torch.no_grad():
                self.pos_emb.copy_(generator.pos_emb)
            self.time_mlp.load_state_dict(generator.time_mlp.state_dict())
            for mine, theirs in zip(self.blocks, generator.blocks):
                mine.load_state_dict(theirs.state_dict())
        else:
            ch = resnet_channels
            self.stem = nn.Conv3d(cfg.latent_channels, ch, 1)
            self.time_proj = nn.Linear(d, ch)
            self.blocks = nn.ModuleList(_ResUnit(ch) for _ in range(cfg.num_blocks))
            self.zero_projs = nn.ModuleList(
                nn.Conv3d(ch, d, 1) for _ in range(cfg.num_blocks)
            )
        for proj in self.zero_projs:
            nn.init.zeros_(proj.weight)
            nn.init.zeros_(proj.bias)

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def forward(self, z_traj: torch.Tensor, t, x_t: torch.Tensor | None = None) -> list[torch.Tensor]:
        cfg = self.gen_config
        expect = (cfg.latent_frames, cfg.latent_height, cfg.latent_width, cfg.latent_channels)
        if z_traj.ndim != 5 or tuple(z_traj.shape[1:]) != expect:
            raise ValueError(f"expected trajectory latent [B, {expect}], got {tuple(z_traj.shape)}")
        b = z_traj.shape[0]
        inp = z_traj
        if self.sees_xt:
            if x_t is None:
                raise ValueError("adapter built with sees_xt=True requires x_t")
            inp = z_traj + x_t
        t = torch.as_tensor(t, dtype=z_traj.dtype, device=z_traj.device)
        if t.ndim == 0:
            t = t.expand(b)
        temb = timestep_embedding(t, cfg.hidden_dim)

        outs = []
        if self.kind == "controlnet":
            h = self.in_proj(inp.reshape(b, -1, cfg.latent_channels)) + self.pos_emb
            h = h + self.time_mlp(temb)[:, None, :]
            for block, proj in zip(self.blocks, self.zero_projs):
                h = block(h)
                outs.append(proj(h))
        else:
            # [B, C, F', H', W'] feature stream for the conv stack
            feat = self.stem(inp.permute(0, 4, 1, 2, 3))
            feat = feat + self.time_proj(temb)[:, :, None, None, None]
            for block, proj in zip(self.blocks, self.zero_projs):
                feat = block(feat)
                res = proj(feat)  # [B, d, F', H', W']
                outs.append(res.flatten(2).transpose(1, 2))
        return outs


def build_adapter(kind: str, generator_config: DenoiserConfig,
                  generator: Denoiser | None = None, seed: int = 0,
                  resnet_channels: int = 16, sees_xt: bool = False) -> TrajectoryAdapter:
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return TrajectoryAdapter(kind, generator_config, generator=generator,
                                 resnet_channels=resnet_channels, sees_xt=sees_xt)


def adapter_forward(adapter: TrajectoryAdapter, z_traj: torch.Tensor, t,
                    x_t: torch.Tensor | None = None) -> list[torch.Tensor]:
    return adapter(z_traj, t, x_t=x_t)


def guided_predict_x0(generator: Denoiser, adapter: TrajectoryAdapter,
                      x_t: torch.Tensor, t, z_traj: torch.Tensor,
                      cond: Conditioning) -> torch.Tensor:
    """Generator forward with the adapter's residual added after each block."""
    residuals = adapter(z_traj, t, x_t=x_t if adapter.sees_xt else None)
    return generator(x_t, t, cond, residuals=residuals)
