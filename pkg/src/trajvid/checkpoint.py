"""Single-file checkpoint container: JSON header + named little-endian tensors.

Layout: 8-byte magic, u64-LE header length, UTF-8 JSON header, then raw tensor
payloads. The header carries arbitrary metadata plus a `tensors` index of
{name, dtype, shape, offset, nbytes} records; offsets are relative to the end
of the header. Float tensors are stored as '<f4' ('<f8' in 64-bit mode),
integer tensors as '<i8'.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

MAGIC = b"TVCKPT1\n"


class CheckpointError(RuntimeError):
    pass


_DTYPES = {"float32": "<f4", "float64": "<f8", "int64": "<i8", "int32": "<i4",
           "uint8": "|u1", "bool": "|b1"}


def _to_numpy(t) -> np.ndarray:
    if isinstance(t, torch.Tensor):
        t = t.detach().cpu().numpy()
    arr = np.ascontiguousarray(t)
    code = _DTYPES.get(str(arr.dtype))
    if code is None:
        raise CheckpointError(f"unsupported tensor dtype {arr.dtype}")
    return arr.astype(code)


def save_checkpoint(path: str | Path, header: dict, tensors: dict[str, object]) -> None:
    arrays = {name: _to_numpy(t) for name, t in tensors.items()}
    index, offset = [], 0
    for name in sorted(arrays):
        a = arrays[name]
        index.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape),
                      "offset": offset, "nbytes": a.nbytes})
        offset += a.nbytes
    head = dict(header)
    head["tensors"] = index
    head_bytes = json.dumps(head, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(head_bytes)))
        f.write(head_bytes)
        for rec in index:
            f.write(arrays[rec["name"]].tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic")
    (hlen,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16 : 16 + hlen].decode())
    base = 16 + hlen
    tensors = {}
    for rec in header.pop("tensors"):
        start = base + rec["offset"]
        end = start + rec["nbytes"]
        if end > len(data):
            raise CheckpointError(f"{path}: truncated payload for {rec['name']}")
        arr = np.frombuffer(data[start:end], dtype=rec["dtype"]).reshape(rec["shape"])
        tensors[rec["name"]] = arr.copy()
    return header, tensors


def save_module(path: str | Path, module: nn.Module, header: dict) -> None:
    save_checkpoint(path, header, dict(module.state_dict()))


def load_state_into(module: nn.Module, tensors: dict[str, np.ndarray]) -> None:
    state = {k: torch.from_numpy(v) for k, v in tensors.items()}
    ref = module.state_dict()
    if set(state) != set(ref):
        missing = set(ref) - set(state)
        extra = set(state) - set(ref)
        raise CheckpointError(f"state mismatch: missing={sorted(missing)} extra={sorted(extra)}")
    module.load_state_dict({k: v.to(ref[k].dtype) for k, v in state.items()})


def param_hash(module: nn.Module) -> str:
    """Stable sha256 over the module's named parameters and buffers."""
    h = hashlib.sha256()
    for name, t in sorted(module.state_dict().items()):
        h.update(name.encode())
        h.update(t.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
