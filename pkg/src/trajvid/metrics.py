"""Trajectory-accuracy and visual-quality metrics.

Segmentation is exact color thresholding against the scene palette; quality is
a Frechet distance over statistics of a fixed-seed random conv feature stack
(reported as "toy-FD", never as FID), plus a Laplacian sharpness score.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .synth import boxes_from_masks

SEGMENT_THRESHOLD = 0.25
FEATURE_SEED = 20240817
COV_JITTER = 1e-6


class UndefinedMetricError(ValueError):
    """IoU requested over pairs that are all empty."""


def segment_generated(video: np.ndarray, palette: np.ndarray,
                      background: np.ndarray | None = None) -> np.ndarray:
    """Recover per-object masks [F, K, H, W] by nearest-palette-color assignment.

    A pixel belongs to object k iff its RGB distance to palette[k] is below
    SEGMENT_THRESHOLD and smaller than to every other palette entry and the
    background.
    """
    if background is None:
        background = np.zeros(3, dtype=np.float32)
    refs = np.concatenate([palette, background[None]], axis=0)  # [K+1, 3]
    d = np.linalg.norm(video[..., None, :] - refs, axis=-1)     # [F, H, W, K+1]
    nearest = np.argmin(d, axis=-1)
    k = palette.shape[0]
    masks = np.zeros((video.shape[0], k) + video.shape[1:3], dtype=bool)
    for ki in range(k):
        masks[:, ki] = (nearest == ki) & (d[..., ki] < SEGMENT_THRESHOLD)
    return masks


def mask_iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean per-object-frame IoU; pairs where both masks are empty are skipped."""
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    inter = np.logical_and(pred, gt).sum(axis=(-2, -1)).astype(np.float64)
    union = np.logical_or(pred, gt).sum(axis=(-2, -1)).astype(np.float64)
    valid = union > 0
    if not np.any(valid):
        raise UndefinedMetricError("all mask pairs empty")
    return float((inter[valid] / union[valid]).mean())


def _box_area(b: np.ndarray) -> np.ndarray:
    return np.maximum(b[..., 2] - b[..., 0], 0) * np.maximum(b[..., 3] - b[..., 1], 0)


def box_iou(pred_boxes: np.ndarray, gt_boxes: np.ndarray) -> float:
    """Mean rectangle IoU over frames and objects; empty-empty pairs skipped."""
    if pred_boxes.shape != gt_boxes.shape:
        raise ValueError(f"shape mismatch: {pred_boxes.shape} vs {gt_boxes.shape}")
    p = pred_boxes.astype(np.float64)
    g = gt_boxes.astype(np.float64)
    ix0 = np.maximum(p[..., 0], g[..., 0])
    iy0 = np.maximum(p[..., 1], g[..., 1])
    ix1 = np.minimum(p[..., 2], g[..., 2])
    iy1 = np.minimum(p[..., 3], g[..., 3])
    inter = np.maximum(ix1 - ix0, 0) * np.maximum(iy1 - iy0, 0)
    union = _box_area(p) + _box_area(g) - inter
    valid = union > 0
    if not np.any(valid):
        raise UndefinedMetricError("all box pairs empty")
    return float((inter[valid] / union[valid]).mean())


def _conv2d(x: np.ndarray, w: np.ndarray, stride: int = 2) -> np.ndarray:
    """Valid 3x3 strided conv; x [N, H, W, Cin], w [3, 3, Cin, Cout]."""
    n, h, wd, _ = x.shape
    ho = (h - 3) // stride + 1
    wo = (wd - 3) // stride + 1
    out = np.zeros((n, ho, wo, w.shape[-1]), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            patch = x[:, dy : dy + ho * stride : stride, dx : dx + wo * stride : stride]
            out += patch @ w[dy, dx]
    return out


def _feature_weights() -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(FEATURE_SEED)
    w1 = rng.normal(0, 1 / np.sqrt(27), size=(3, 3, 3, 12))
    w2 = rng.normal(0, 1 / np.sqrt(9 * 12), size=(3, 3, 12, 24))
    return w1, w2


def video_features(videos: np.ndarray) -> np.ndarray:
    """[N, F, H, W, 3] -> [N, 48] pooled random-projection features."""
    videos = np.asarray(videos, dtype=np.float64)
    n, f = videos.shape[:2]
    w1, w2 = _feature_weights()
    x = videos.reshape((n * f,) + videos.shape[2:])
    x = np.maximum(_conv2d(x, w1), 0)
    x = np.maximum(_conv2d(x, w2), 0)
    x = x.reshape(n, f, -1, x.shape[-1])
    mean_pool = x.mean(axis=(1, 2))
    max_pool = x.max(axis=(1, 2))
    return np.concatenate([mean_pool, max_pool], axis=1)


def frechet_from_stats(mu_a, cov_a, mu_b, cov_b) -> float:
    d = cov_a.shape[0]
    cov_a = cov_a + COV_JITTER * np.eye(d)
    cov_b = cov_b + COV_JITTER * np.eye(d)
    covmean = scipy.linalg.sqrtm(cov_a @ cov_b)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    diff = mu_a - mu_b
    fd = diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2 * np.trace(covmean)
    return float(max(fd, 0.0))


def toy_frechet(videos_a: np.ndarray, videos_b: np.ndarray) -> float:
    """Frechet distance between Gaussian fits of pooled random-conv features."""
    if len(videos_a) < 16 or len(videos_b) < 16:
        raise ValueError("need at least 16 videos per side")
    fa = video_features(videos_a)
    fb = video_features(videos_b)
    return frechet_from_stats(fa.mean(axis=0), np.cov(fa, rowvar=False),
                              fb.mean(axis=0), np.cov(fb, rowvar=False))


def sharpness(video: np.ndarray) -> float:
    """Mean absolute discrete Laplacian over all frames and channels."""
    v = np.asarray(video, dtype=np.float64)
    lap = (4 * v[:, 1:-1, 1:-1] - v[:, :-2, 1:-1] - v[:, 2:, 1:-1]
           - v[:, 1:-1, :-2] - v[:, 1:-1, 2:])
    return float(np.abs(lap).mean())


def boxes_from_generated(video: np.ndarray, palette: np.ndarray,
                         background: np.ndarray | None = None) -> np.ndarray:
    """Tight boxes of the segmented objects in a generated video."""
    return boxes_from_masks(segment_generated(video, palette, background))
