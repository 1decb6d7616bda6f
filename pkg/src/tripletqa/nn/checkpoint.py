"""Single-file binary checkpoints: versioned header, JSON metadata,
named parameter payloads (row-major float64)."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import DataError
from .autodiff import Tensor

_MAGIC = b"TQACKPT\x01"
_VERSION = 1


def save_checkpoint(path: str | Path, meta: dict, params: list[tuple[str, Tensor]]) -> None:
    meta_blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<Q", len(meta_blob)))
        fh.write(meta_blob)
        fh.write(struct.pack("<I", len(params)))
        for name, tensor in params:
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            data = np.ascontiguousarray(tensor.data, dtype=np.float64)
            fh.write(struct.pack("<B", data.ndim))
            for dim in data.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(data.tobytes(order="C"))


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    blob = Path(path).read_bytes()
    if blob[:8] != _MAGIC:
        raise DataError(f"{path}: not a checkpoint file")
    offset = 8
    (version,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    if version != _VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    (meta_len,) = struct.unpack_from("<Q", blob, offset)
    offset += 8
    meta = json.loads(blob[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    (count,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    params: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}Q", blob, offset)
        offset += 8 * ndim
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(blob, dtype="<f8", count=size, offset=offset).reshape(shape)
        offset += 8 * size
        params[name] = data.copy()
    return meta, params


def restore_parameters(named: list[tuple[str, Tensor]], stored: dict[str, np.ndarray]) -> None:
    """Copy stored arrays into live tensors, validating names and shapes."""
    for name, tensor in named:
        if name not in stored:
            raise DataError(f"checkpoint missing parameter {name!r}")
        if stored[name].shape != tensor.data.shape:
            raise DataError(
                f"checkpoint parameter {name!r} has shape {stored[name].shape}, "
                f"expected {tensor.data.shape}"
            )
        tensor.data[...] = stored[name]
