"""Deterministic invertible video <-> latent codec.

A pure space-time-to-channel rearrangement (temporal factor 2, spatial factor
4) combined with the affine map x -> (x - 0.5) * 2. The rearrangement is an
index permutation and the affine constants are powers of two, so the round
trip is bit-exact for videos quantized to a dyadic grid no finer than 2^-23
(all rendered videos here live on the 1/256 grid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TEMPORAL_FACTOR = 2
SPATIAL_FACTOR = 4
LATENT_CHANNELS = 3 * TEMPORAL_FACTOR * SPATIAL_FACTOR ** 2  # 96

ROLE_TAGS = ("video_latent", "noisy_latent", "trajectory_latent", "noise")


@dataclass
class LatentGrid:
    data: np.ndarray  # [F', H', W', C]
    role: str = "video_latent"

    def __post_init__(self):
        if self.role not in ROLE_TAGS:
            raise ValueError(f"unknown latent role {self.role!r}")
        if self.data.ndim != 4 or self.data.shape[-1] != LATENT_CHANNELS:
            raise ValueError(f"expected [F',H',W',{LATENT_CHANNELS}] latent, got {self.data.shape}")


def latent_shape(num_frames: int, height: int, width: int) -> tuple[int, int, int, int]:
    return (num_frames // TEMPORAL_FACTOR, height // SPATIAL_FACTOR,
            width // SPATIAL_FACTOR, LATENT_CHANNELS)


def encode(video: np.ndarray, role: str = "video_latent") -> LatentGrid:
    """[F, H, W, 3] video in [0,1] -> centered latent [F/2, H/4, W/4, 96]."""
    f, h, w, c = video.shape
    if c != 3:
        raise ValueError(f"expected 3 channels, got {c}")
    ft, fs = TEMPORAL_FACTOR, SPATIAL_FACTOR
    if f % ft or h % fs or w % fs:
        raise ValueError(f"dimensions {(f, h, w)} not divisible by factors {(ft, fs)}")
    x = (video.astype(np.float32) - np.float32(0.5)) * np.float32(2.0)
    x = x.reshape(f // ft, ft, h // fs, fs, w // fs, fs, 3)
    x = x.transpose(0, 2, 4, 1, 3, 5, 6)  # [F', H', W', ft, fs, fs, 3]
    x = x.reshape(f // ft, h // fs, w // fs, LATENT_CHANNELS)
    return LatentGrid(data=np.ascontiguousarray(x), role=role)


def decode(latent: LatentGrid | np.ndarray) -> np.ndarray:
    """Exact inverse of encode."""
    data = latent.data if isinstance(latent, LatentGrid) else latent
    if data.ndim != 4 or data.shape[-1] != LATENT_CHANNELS:
        raise ValueError(f"expected [F',H',W',{LATENT_CHANNELS}] latent, got {data.shape}")
    fp, hp, wp, _ = data.shape
    ft, fs = TEMPORAL_FACTOR, SPATIAL_FACTOR
    x = data.reshape(fp, hp, wp, ft, fs, fs, 3)
    x = x.transpose(0, 3, 1, 4, 2, 5, 6)  # [F', ft, H', fs, W', fs, 3]
    x = x.reshape(fp * ft, hp * fs, wp * fs, 3)
    return np.ascontiguousarray(x / np.float32(2.0) + np.float32(0.5))
