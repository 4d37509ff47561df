"""Shared DiT-style denoiser backbone.

One architecture serves four roles: the multi-step teacher, the few-step
student, both score models, and the discriminator backbone. The network is an
x0-predictor over latent tokens, conditioned on a timestep embedding plus
prepended caption and first-frame tokens. The output head is zero-initialized.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, asdict

import torch
import torch.nn as nn

from .codec import LATENT_CHANNELS
from .synth import CAPTION_VOCAB, CAPTION_LEN


@dataclass
class DenoiserConfig:
    num_blocks: int = 8
    hidden_dim: int = 64
    num_heads: int = 4
    latent_frames: int = 4
    latent_height: int = 8
    latent_width: int = 8
    latent_channels: int = LATENT_CHANNELS
    caption_len: int = CAPTION_LEN
    vocab_size: int = len(CAPTION_VOCAB)

    def __post_init__(self):
        if self.hidden_dim % self.num_heads:
            raise ValueError("hidden_dim must be divisible by num_heads")

    @property
    def num_video_tokens(self) -> int:
        return self.latent_frames * self.latent_height * self.latent_width

    @property
    def num_frame_tokens(self) -> int:
        return self.latent_height * self.latent_width

    @property
    def num_cond_tokens(self) -> int:
        return self.caption_len + self.num_frame_tokens

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DenoiserConfig":
        return cls(**d)


@dataclass
class Conditioning:
    """Caption token ids [B, L] and first latent-frame tokens [B, H', W', C]."""

    caption_tokens: torch.Tensor
    first_frame: torch.Tensor


def timestep_embedding(t: torch.Tensor, dim: int, max_period: float = 10000.0) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(max_period) * torch.arange(half, dtype=t.dtype, device=t.device) / half)
    args = t[:, None] * freqs[None]
    return torch.cat([torch.cos(args), torch.sin(args)], dim=-1)


class TransformerBlock(nn.Module):
    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.ln2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, 4 * dim), nn.GELU(), nn.Linear(4 * dim, dim)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.ln1(x)
        x = x + self.attn(h, h, h, need_weights=False)[0]
        return x + self.mlp(self.ln2(x))


class Denoiser(nn.Module):
    """x0-prediction denoiser over [B, F', H', W', C] latents."""

    def __init__(self, config: DenoiserConfig):
        super().__init__()
        self.config = config
        d = config.hidden_dim
        self.in_proj = nn.Linear(config.latent_channels, d)
        self.pos_emb = nn.Parameter(torch.randn(config.num_video_tokens, d) * 0.02)
        self.caption_emb = nn.Embedding(config.vocab_size, d)
        self.caption_pos = nn.Parameter(torch.randn(config.caption_len, d) * 0.02)
        self.frame_proj = nn.Linear(config.latent_channels, d)
        self.frame_pos = nn.Parameter(torch.randn(config.num_frame_tokens, d) * 0.02)
        self.time_mlp = nn.Sequential(nn.Linear(d, d), nn.SiLU(), nn.Linear(d, d))
        self.blocks = nn.ModuleList(
            TransformerBlock(d, config.num_heads) for _ in range(config.num_blocks)
        )
        self.ln_out = nn.LayerNorm(d)
        self.out_proj = nn.Linear(d, config.latent_channels)
        nn.init.zeros_(self.out_proj.weight)
        nn.init.zeros_(self.out_proj.bias)

    def _check_latent(self, x: torch.Tensor):
        c = self.config
        expect = (c.latent_frames, c.latent_height, c.latent_width, c.latent_channels)
        if x.ndim != 5 or tuple(x.shape[1:]) != expect:
            raise ValueError(f"expected latent [B, {expect}], got {tuple(x.shape)}")

    def embed_caption(self, tokens: torch.Tensor) -> torch.Tensor:
        if tokens.shape[-1] != self.config.caption_len:
            raise ValueError(f"expected {self.config.caption_len} caption tokens")
        return self.caption_emb(tokens) + self.caption_pos

    def embed_first_frame(self, frame: torch.Tensor) -> torch.Tensor:
        b = frame.shape[0]
        toks = self.frame_proj(frame.reshape(b, -1, self.config.latent_channels))
        return toks + self.frame_pos

    def embed_latent_tokens(self, latent: torch.Tensor) -> torch.Tensor:
        """Project a [B, F', H', W', C] latent to positioned hidden tokens."""
        b = latent.shape[0]
        toks = self.in_proj(latent.reshape(b, -1, self.config.latent_channels))
        return toks + self.pos_emb

    def _run(self, x_t: torch.Tensor, t, cond: Conditioning,
             residuals: list[torch.Tensor] | None = None,
             collect: bool = False):
        self._check_latent(x_t)
        b = x_t.shape[0]
        cfg = self.config
        t = torch.as_tensor(t, dtype=x_t.dtype, device=x_t.device)
        if t.ndim == 0:
            t = t.expand(b)
        temb = self.time_mlp(timestep_embedding(t, cfg.hidden_dim))[:, None, :]

        cap = self.embed_caption(cond.caption_tokens)
        if cap.shape[0] == 1 and b > 1:
            cap = cap.expand(b, -1, -1)
        ff = self.embed_first_frame(cond.first_frame.to(x_t.dtype))
        if ff.shape[0] == 1 and b > 1:
            ff = ff.expand(b, -1, -1)
        vid = self.embed_latent_tokens(x_t)

        h = torch.cat([cap, ff, vid], dim=1) + temb
        n_cond = cfg.num_cond_tokens
        if residuals is not None and len(residuals) != len(self.blocks):
            raise ValueError("one adapter residual per block required")

        activations = []
        for i, block in enumerate(self.blocks):
            h = block(h)
            if residuals is not None:
                h = torch.cat([h[:, :n_cond], h[:, n_cond:] + residuals[i]], dim=1)
            if collect:
                activations.append(h[:, n_cond:])
        out = self.out_proj(self.ln_out(h[:, n_cond:]))
        x0_hat = out.reshape(b, cfg.latent_frames, cfg.latent_height,
                             cfg.latent_width, cfg.latent_channels)
        if collect:
            return x0_hat, activations
        return x0_hat

    def forward(self, x_t: torch.Tensor, t, cond: Conditioning,
                residuals: list[torch.Tensor] | None = None) -> torch.Tensor:
        return self._run(x_t, t, cond, residuals=residuals)

    def forward_with_activations(self, x_t, t, cond: Conditioning):
        """(x0_hat, per-block video-token activations) for discriminator heads."""
        return self._run(x_t, t, cond, collect=True)


@dataclass
class ScoreModel:
    """A denoiser playing the real- or fake-distribution score role."""

    model: Denoiser
    role: str  # "real" | "fake"
    frozen: bool = False

    def __post_init__(self):
        if self.role not in ("real", "fake"):
            raise ValueError("role must be 'real' or 'fake'")


def build_denoiser(config: DenoiserConfig, seed: int = 0) -> Denoiser:
    """Deterministically initialized denoiser."""
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return Denoiser(config)


def predict_x0(model: Denoiser, x_t: torch.Tensor, t, cond: Conditioning) -> torch.Tensor:
    return model(x_t, t, cond)


def clone_params(model: Denoiser) -> Denoiser:
    """Independent deep copy; mutating the copy leaves the original unchanged."""
    return copy.deepcopy(model)


def freeze(module: nn.Module) -> nn.Module:
    for p in module.parameters():
        p.requires_grad_(False)
    return module
