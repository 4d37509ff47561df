"""Diffusion discriminator: frozen denoiser backbone + attention classifiers.

Classifier heads attach to selected backbone blocks. Each head routes a
learnable query token through semantic self-attention (first frame + caption),
trajectory cross-attention, and video cross-attention, with a residual
connection after each; per-head MLPs emit one token each, and a final MLP over
the concatenated tokens produces a single real/fake logit.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

from .denoiser import Denoiser, Conditioning, freeze

VARIANTS = ("vc", "ss-vc", "tc-vc", "full")


def variant_flags(variant: str) -> tuple[bool, bool]:
    """(use_ss, use_tc); video cross-attention is always on."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    return variant in ("ss-vc", "full"), variant in ("tc-vc", "full")


class ClassifierHead(nn.Module):
    def __init__(self, dim: int, num_heads: int, use_ss: bool, use_tc: bool):
        super().__init__()
        self.use_ss = use_ss
        self.use_tc = use_tc
        self.query = nn.Parameter(torch.randn(1, 1, dim) * 0.02)
        if use_ss:
            self.ss_attn = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        if use_tc:
            self.tc_attn = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.vc_attn = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.mlp = nn.Sequential(nn.Linear(dim, dim), nn.GELU(), nn.Linear(dim, dim))

    def forward(self, e_video: torch.Tensor, e_sem: torch.Tensor | None,
                e_traj: torch.Tensor | None) -> torch.Tensor:
        b = e_video.shape[0]
        q = self.query.expand(b, -1, -1)
        if self.use_ss:
            toks = torch.cat([q, e_sem], dim=1)
            q = q + self.ss_attn(q, toks, toks, need_weights=False)[0]
        if self.use_tc:
            q = q + self.tc_attn(q, e_traj, e_traj, need_weights=False)[0]
        q = q + self.vc_attn(q, e_video, e_video, need_weights=False)[0]
        return self.mlp(q[:, 0])  # [B, d]


class DiffusionDiscriminator(nn.Module):
    def __init__(self, backbone: Denoiser, layer_ids: list[int], variant: str = "full"):
        super().__init__()
        num_blocks = backbone.config.num_blocks
        if sorted(set(layer_ids)) != list(layer_ids) or not layer_ids:
            raise ValueError("layer_ids must be nonempty and strictly increasing")
        if layer_ids[0] < 0 or layer_ids[-1] >= num_blocks:
            raise ValueError(f"layer id out of range for {num_blocks}-block backbone")
        self.backbone = freeze(backbone)
        self.layer_ids = list(layer_ids)
        self.variant = variant
        use_ss, use_tc = variant_flags(variant)
        self.use_ss, self.use_tc = use_ss, use_tc
        d, heads = backbone.config.hidden_dim, backbone.config.num_heads
        self.heads = nn.ModuleList(
            ClassifierHead(d, heads, use_ss, use_tc) for _ in layer_ids
        )
        self.final_mlp = nn.Sequential(
            nn.Linear(d * len(layer_ids), d), nn.GELU(), nn.Linear(d, 1)
        )

    def classifier_parameters(self):
        yield from self.heads.parameters()
        yield from self.final_mlp.parameters()

    def forward(self, x_t: torch.Tensor, t, cond: Conditioning,
                z_traj: torch.Tensor | None = None) -> torch.Tensor:
        """Single logit per sample, shape [B]."""
        if self.use_tc and z_traj is None:
            raise ValueError("trajectory cross-attention enabled but z_traj missing")
        # backbone params are frozen, but the graph w.r.t. x_t must survive so the
        # generator-side adversarial gradient can flow through the logit
        _, activations = self.backbone.forward_with_activations(x_t, t, cond)
        e_sem = None
        if self.use_ss:
            e_i = self.backbone.embed_first_frame(cond.first_frame.to(x_t.dtype))
            e_text = self.backbone.embed_caption(cond.caption_tokens)
            b = x_t.shape[0]
            if e_i.shape[0] == 1 and b > 1:
                e_i = e_i.expand(b, -1, -1)
            if e_text.shape[0] == 1 and b > 1:
                e_text = e_text.expand(b, -1, -1)
            e_sem = torch.cat([e_i, e_text], dim=1).detach()
        e_traj = None
        if self.use_tc:
            e_traj = self.backbone.embed_latent_tokens(z_traj).detach()
        tokens = [
            head(activations[i], e_sem, e_traj)
            for head, i in zip(self.heads, self.layer_ids)
        ]
        return self.final_mlp(torch.cat(tokens, dim=-1))[:, 0]


def default_layer_ids(num_blocks: int, num_heads: int = 4) -> list[int]:
    """Evenly spaced block indices, e.g. [1, 3, 5, 7] for 8 blocks."""
    n = min(num_heads, num_blocks)
    step = num_blocks // n
    return [step * (i + 1) - 1 for i in range(n)]


def build_discriminator(backbone: Denoiser, layer_ids: list[int] | None = None,
                        variant: str = "full", seed: int = 0) -> DiffusionDiscriminator:
    if layer_ids is None:
        layer_ids = default_layer_ids(backbone.config.num_blocks)
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        return DiffusionDiscriminator(backbone, layer_ids, variant)


def d_loss(logit_real: torch.Tensor, logit_fake: torch.Tensor) -> torch.Tensor:
    """softplus(-logit_real) + softplus(logit_fake), averaged over the batch."""
    return (F.softplus(-logit_real) + F.softplus(logit_fake)).mean()


def g_adv_loss(logit_fake: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator-side loss softplus(-logit_fake)."""
    return F.softplus(-logit_fake).mean()
