"""Synthetic moving-shape videos with exact trajectory annotations.

Scenes are rendered at a small fixed resolution with saturated, well-separated
palette colors so that color-threshold segmentation recovers the ground-truth
masks exactly. All generation is a pure function of (spec, seed).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SHAPE_KINDS = ("circle", "square", "triangle")
MOTION_KINDS = ("linear", "sine", "orbit")

# Saturated colors on the 1/256 grid, pairwise max-channel distance >= 0.5
# from each other and from the black background.
DEFAULT_PALETTE = (
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (1.0, 1.0, 0.0),
    (1.0, 0.0, 1.0),
)
COLOR_NAMES = ("red", "green", "blue", "yellow", "magenta")

CAPTION_VOCAB = (
    "<pad>", "a", "and", "moving",
    "red", "green", "blue", "yellow", "magenta",
    "circle", "square", "triangle",
)
CAPTION_LEN = 16

PLACEMENT_RETRIES = 100


class InfeasibleSceneError(ValueError):
    """Raised when shapes cannot be placed without overlap within the retry budget."""


class DatasetError(RuntimeError):
    """Raised on corrupt or inconsistent on-disk datasets."""


@dataclass(frozen=True)
class SceneSpec:
    num_objects: int
    num_frames: int = 8
    height: int = 32
    width: int = 32
    shape_kinds: tuple[str, ...] | None = None
    motion_kinds: tuple[str, ...] | None = None
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.num_objects < 1:
            raise ValueError("num_objects must be >= 1")
        if self.num_objects > len(DEFAULT_PALETTE):
            raise ValueError(f"at most {len(DEFAULT_PALETTE)} objects supported")
        if self.shape_kinds is not None:
            if len(self.shape_kinds) != self.num_objects:
                raise ValueError("shape_kinds length must equal num_objects")
            for k in self.shape_kinds:
                if k not in SHAPE_KINDS:
                    raise ValueError(f"unknown shape kind {k!r}")
        if self.motion_kinds is not None:
            if len(self.motion_kinds) != self.num_objects:
                raise ValueError("motion_kinds length must equal num_objects")
            for k in self.motion_kinds:
                if k not in MOTION_KINDS:
                    raise ValueError(f"unknown motion kind {k!r}")

    def palette(self) -> np.ndarray:
        return np.asarray(DEFAULT_PALETTE[: self.num_objects], dtype=np.float32)


@dataclass
class VideoSample:
    frames: np.ndarray        # [F, H, W, 3] float32 in [0, 1]
    masks: np.ndarray         # [F, K, H, W] bool
    boxes: np.ndarray         # [F, K, 4] int32, (x_min, y_min, x_max, y_max), max exclusive
    caption_tokens: list[int]
    object_ids: list[int]
    palette: np.ndarray       # [K, 3] float32
    background: np.ndarray    # [3] float32
    shape_kinds: list[str] = field(default_factory=list)
    seed: int = 0

    @property
    def num_objects(self) -> int:
        return self.masks.shape[1]

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


@dataclass
class TrajectoryVideo:
    frames: np.ndarray  # [F, H, W, 3] float32
    mode: str           # "dense" | "sparse"


def _shape_mask(kind: str, cx: float, cy: float, r: float, h: int, w: int) -> np.ndarray:
    ys, xs = np.mgrid[0:h, 0:w]
    if kind == "circle":
        return (xs - cx) ** 2 + (ys - cy) ** 2 <= r ** 2
    if kind == "square":
        return np.maximum(np.abs(xs - cx), np.abs(ys - cy)) <= r
    if kind == "triangle":
        # upward-pointing isoceles triangle inscribed in the 2r box
        inside_y = (ys >= cy - r) & (ys <= cy + r)
        halfwidth = (ys - (cy - r)) / 2.0
        return inside_y & (np.abs(xs - cx) <= halfwidth)
    raise ValueError(f"unknown shape kind {kind!r}")


def _motion_track(kind: str, rng: np.random.Generator, num_frames: int,
                  h: int, w: int, r: float) -> np.ndarray:
    """Per-frame (cx, cy) centers, guaranteed to keep the shape inside the frame."""
    m = r + 1.5  # margin from the border
    lo_x, hi_x = m, w - 1 - m
    lo_y, hi_y = m, h - 1 - m
    ts = np.arange(num_frames) / max(num_frames - 1, 1)
    if kind == "linear":
        x0, y0 = rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)
        x1, y1 = rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)
        return np.stack([x0 + (x1 - x0) * ts, y0 + (y1 - y0) * ts], axis=1)
    if kind == "sine":
        x0, x1 = rng.uniform(lo_x, hi_x), rng.uniform(lo_x, hi_x)
        amp_max = (hi_y - lo_y) / 2.0
        amp = rng.uniform(0.3, 1.0) * amp_max
        yc = rng.uniform(lo_y + amp, hi_y - amp)
        phase = rng.uniform(0, 2 * np.pi)
        xs = x0 + (x1 - x0) * ts
        ys = yc + amp * np.sin(phase + 2 * np.pi * ts)
        return np.stack([xs, ys], axis=1)
    if kind == "orbit":
        rad_max = min(hi_x - lo_x, hi_y - lo_y) / 2.0
        rad = rng.uniform(0.3, 1.0) * rad_max
        cx = rng.uniform(lo_x + rad, hi_x - rad)
        cy = rng.uniform(lo_y + rad, hi_y - rad)
        phase = rng.uniform(0, 2 * np.pi)
        direction = rng.choice([-1.0, 1.0])
        ang = phase + direction * 2 * np.pi * ts
        return np.stack([cx + rad * np.cos(ang), cy + rad * np.sin(ang)], axis=1)
    raise ValueError(f"unknown motion kind {kind!r}")


def _caption_tokens(shape_kinds: list[str], num_objects: int) -> list[int]:
    vocab = {w: i for i, w in enumerate(CAPTION_VOCAB)}
    words: list[str] = []
    for k in range(num_objects):
        if k > 0:
            words.append("and")
        words += ["a", COLOR_NAMES[k], shape_kinds[k]]
    words.append("moving")
    toks = [vocab[w] for w in words][:CAPTION_LEN]
    return toks + [vocab["<pad>"]] * (CAPTION_LEN - len(toks))


def boxes_from_masks(masks: np.ndarray) -> np.ndarray:
    """Tight (x_min, y_min, x_max, y_max) boxes, max exclusive; zeros for empty masks."""
    f, k, h, w = masks.shape
    boxes = np.zeros((f, k, 4), dtype=np.int32)
    for fi in range(f):
        for ki in range(k):
            ys, xs = np.nonzero(masks[fi, ki])
            if len(xs) == 0:
                continue
            boxes[fi, ki] = (xs.min(), ys.min(), xs.max() + 1, ys.max() + 1)
    return boxes


def generate_scene(spec: SceneSpec) -> VideoSample:
    """Deterministically synthesize a moving-shape video with full annotations."""
    rng = np.random.default_rng(spec.seed)
    f, h, w = spec.num_frames, spec.height, spec.width
    k = spec.num_objects

    shape_kinds = list(spec.shape_kinds) if spec.shape_kinds is not None else \
        [SHAPE_KINDS[int(rng.integers(len(SHAPE_KINDS)))] for _ in range(k)]
    motion_kinds = list(spec.motion_kinds) if spec.motion_kinds is not None else \
        [MOTION_KINDS[int(rng.integers(len(MOTION_KINDS)))] for _ in range(k)]

    r_max = min(h, w) / 8.0
    for _attempt in range(PLACEMENT_RETRIES):
        radii = rng.uniform(2.5, max(r_max, 3.0), size=k)
        tracks = np.stack(
            [_motion_track(motion_kinds[i], rng, f, h, w, radii[i]) for i in range(k)]
        )  # [K, F, 2]
        # keep shapes separated by at least one background pixel at every frame
        ok = True
        for i in range(k):
            for j in range(i + 1, k):
                d = np.linalg.norm(tracks[i] - tracks[j], axis=1)
                if np.any(d < radii[i] + radii[j] + 2.5):
                    ok = False
        if ok:
            break
    else:
        raise InfeasibleSceneError(
            f"could not place {k} non-overlapping shapes in {PLACEMENT_RETRIES} attempts"
        )

    palette = spec.palette()
    background = np.asarray(spec.background, dtype=np.float32)
    frames = np.broadcast_to(background, (f, h, w, 3)).astype(np.float32).copy()
    masks = np.zeros((f, k, h, w), dtype=bool)
    for fi in range(f):
        for ki in range(k):
            cx, cy = tracks[ki, fi]
            m = _shape_mask(shape_kinds[ki], cx, cy, radii[ki], h, w)
            masks[fi, ki] = m
            frames[fi][m] = palette[ki]

    return VideoSample(
        frames=frames,
        masks=masks,
        boxes=boxes_from_masks(masks),
        caption_tokens=_caption_tokens(shape_kinds, k),
        object_ids=list(range(k)),
        palette=palette,
        background=background,
        shape_kinds=shape_kinds,
        seed=spec.seed,
    )


def render_trajectory_map(sample: VideoSample, mode: str) -> TrajectoryVideo:
    """Rasterize per-object condition maps: filled masks (dense) or filled boxes (sparse)."""
    if mode not in ("dense", "sparse"):
        raise ValueError(f"mode must be 'dense' or 'sparse', got {mode!r}")
    f, h, w = sample.frames.shape[:3]
    out = np.zeros((f, h, w, 3), dtype=np.float32)
    for fi in range(f):
        for ki in range(sample.num_objects):
            if mode == "dense":
                out[fi][sample.masks[fi, ki]] = sample.palette[ki]
            else:
                x0, y0, x1, y1 = sample.boxes[fi, ki]
                out[fi, y0:y1, x0:x1] = sample.palette[ki]
    return TrajectoryVideo(frames=out, mode=mode)


def boxes_to_trajectory_frames(boxes: np.ndarray, palette: np.ndarray,
                               height: int, width: int) -> np.ndarray:
    """Sparse trajectory frames from an arbitrary [F, K, 4] box track."""
    f, k = boxes.shape[:2]
    out = np.zeros((f, height, width, 3), dtype=np.float32)
    for fi in range(f):
        for ki in range(k):
            x0, y0, x1, y1 = np.round(boxes[fi, ki]).astype(int)
            x0, x1 = np.clip([x0, x1], 0, width)
            y0, y1 = np.clip([y0, y1], 0, height)
            out[fi, y0:y1, x0:x1] = palette[ki]
    return out


def interpolate_boxes(keyframes: list[tuple[int, np.ndarray]], num_frames: int) -> np.ndarray:
    """Piecewise-linear per-coordinate interpolation of keyframe boxes to all frames."""
    if len(keyframes) < 2:
        raise ValueError("need at least two keyframes")
    idxs = [int(i) for i, _ in keyframes]
    if idxs != sorted(set(idxs)):
        raise ValueError("keyframe indices must be strictly increasing")
    if idxs[0] != 0 or idxs[-1] != num_frames - 1:
        raise ValueError("keyframes must cover frames 0 and F-1")
    boxes = [np.asarray(b, dtype=np.float64) for _, b in keyframes]
    k = boxes[0].shape[0]
    for b in boxes:
        if b.shape != (k, 4):
            raise ValueError("all keyframes must carry the same number of boxes")
    out = np.zeros((num_frames, k, 4), dtype=np.float64)
    for seg in range(len(idxs) - 1):
        i0, i1 = idxs[seg], idxs[seg + 1]
        b0, b1 = boxes[seg], boxes[seg + 1]
        for fi in range(i0, i1 + 1):
            u = (fi - i0) / (i1 - i0)
            out[fi] = b0 + (b1 - b0) * u
    return out


# ---------------------------------------------------------------------------
# dataset i/o

def _sample_record(sample: VideoSample, sample_id: str, group: int | None) -> dict:
    f, k, h, w = sample.masks.shape
    rec = {
        "id": sample_id,
        "file": f"{sample_id}.bin",
        "num_frames": f,
        "num_objects": k,
        "height": h,
        "width": w,
        "seed": int(sample.seed),
        "caption_tokens": [int(t) for t in sample.caption_tokens],
        "object_ids": [int(i) for i in sample.object_ids],
        "shape_kinds": list(sample.shape_kinds),
        "palette": [[float(c) for c in row] for row in sample.palette],
        "background": [float(c) for c in sample.background],
        "dtypes": {"frames": "<f4", "masks": "packed-bool", "boxes": "<i4"},
    }
    if group is not None:
        rec["group"] = int(group)
    return rec


def _sample_blob(sample: VideoSample) -> bytes:
    frames = np.ascontiguousarray(sample.frames, dtype="<f4").tobytes()
    masks = np.packbits(sample.masks.reshape(-1)).tobytes()
    boxes = np.ascontiguousarray(sample.boxes, dtype="<i4").tobytes()
    return frames + masks + boxes


def _blob_sizes(f: int, k: int, h: int, w: int) -> tuple[int, int, int]:
    frames_b = f * h * w * 3 * 4
    masks_b = (f * k * h * w + 7) // 8
    boxes_b = f * k * 4 * 4
    return frames_b, masks_b, boxes_b


def write_dataset(samples: list[VideoSample], path: str | Path,
                  groups: list[int] | None = None) -> str:
    """Write samples + manifest.json to a directory; returns the manifest sha256."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    records = []
    for i, sample in enumerate(samples):
        group = groups[i] if groups is not None else None
        sid = f"sample_{i:05d}"
        records.append(_sample_record(sample, sid, group))
        (path / f"{sid}.bin").write_bytes(_sample_blob(sample))
    manifest = {"version": 1, "num_samples": len(samples), "samples": records}
    data = json.dumps(manifest, indent=2, sort_keys=True).encode()
    (path / "manifest.json").write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def manifest_hash(path: str | Path) -> str:
    return hashlib.sha256((Path(path) / "manifest.json").read_bytes()).hexdigest()


def read_dataset(path: str | Path) -> tuple[list[VideoSample], list[int | None]]:
    """Read a dataset directory back; returns (samples, group keys)."""
    path = Path(path)
    mf = path / "manifest.json"
    if not mf.exists():
        raise DatasetError(f"missing manifest.json in {path}")
    try:
        manifest = json.loads(mf.read_text())
    except json.JSONDecodeError as e:
        raise DatasetError(f"corrupt manifest: {e}") from e
    samples, groups = [], []
    for rec in manifest["samples"]:
        blob_path = path / rec["file"]
        if not blob_path.exists():
            raise DatasetError(f"missing payload {rec['file']}")
        blob = blob_path.read_bytes()
        f, k, h, w = rec["num_frames"], rec["num_objects"], rec["height"], rec["width"]
        fb, mb, bb = _blob_sizes(f, k, h, w)
        if len(blob) != fb + mb + bb:
            raise DatasetError(
                f"{rec['file']}: expected {fb + mb + bb} bytes, got {len(blob)}"
            )
        frames = np.frombuffer(blob[:fb], dtype="<f4").reshape(f, h, w, 3).copy()
        masks = np.unpackbits(np.frombuffer(blob[fb:fb + mb], dtype=np.uint8),
                              count=f * k * h * w).reshape(f, k, h, w).astype(bool)
        boxes = np.frombuffer(blob[fb + mb:], dtype="<i4").reshape(f, k, 4).copy()
        samples.append(VideoSample(
            frames=frames, masks=masks, boxes=boxes,
            caption_tokens=list(rec["caption_tokens"]),
            object_ids=list(rec["object_ids"]),
            palette=np.asarray(rec["palette"], dtype=np.float32),
            background=np.asarray(rec["background"], dtype=np.float32),
            shape_kinds=list(rec["shape_kinds"]),
            seed=rec["seed"],
        ))
        groups.append(rec.get("group"))
    return samples, groups


def benchmark_seed(base_seed: int, group: int, index: int, attempt: int = 0) -> int:
    key = [base_seed, group, index] + ([attempt] if attempt else [])
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def build_benchmark(config: dict, out_dir: str | Path) -> str:
    """Build the grouped benchmark set keyed by object count; returns manifest hash.

    config: {"groups": {object_count: n_samples}, "base_seed": int,
             "num_frames"/"height"/"width": optional overrides}
    """
    group_counts = {int(k): int(v) for k, v in config["groups"].items()}
    if len(group_counts) != len(config["groups"]):
        raise ValueError("duplicate group keys")
    base_seed = int(config.get("base_seed", 0))
    samples, groups = [], []
    for count in sorted(group_counts):
        for i in range(group_counts[count]):
            # crowded scenes reject most seeds; walk a deterministic
            # per-index attempt chain until placement succeeds
            for attempt in range(1000):
                spec = SceneSpec(
                    num_objects=count,
                    num_frames=int(config.get("num_frames", 8)),
                    height=int(config.get("height", 32)),
                    width=int(config.get("width", 32)),
                    seed=benchmark_seed(base_seed, count, i, attempt),
                )
                try:
                    samples.append(generate_scene(spec))
                except InfeasibleSceneError:
                    continue
                groups.append(count)
                break
            else:
                raise InfeasibleSceneError(
                    f"no feasible {count}-object scene for index {i}")
    return write_dataset(samples, out_dir, groups=groups)
