"""Self-describing checkpoint container: config echo plus named f32 tensors."""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .network import NetworkConfig

MAGIC = b"JAAE"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, config: NetworkConfig, params: dict[str, np.ndarray]):
    """Write magic, version, config JSON, then name/shape/f32 payload per tensor."""
    path = Path(path)
    cfg_blob = json.dumps(config.to_dict(), sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(cfg_blob)))
        fh.write(cfg_blob)
        names = sorted(params)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            tensor = np.ascontiguousarray(params[name], dtype=np.float32)
            blob = name.encode()
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(struct.pack("<I", tensor.ndim))
            fh.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            fh.write(tensor.tobytes())


def load_checkpoint(path) -> tuple[NetworkConfig, dict[str, np.ndarray]]:
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FORMAT_VERSION:
            raise CheckpointError(
                f"{path}: format version {version}, expected {FORMAT_VERSION}"
            )
        (cfg_len,) = struct.unpack("<I", fh.read(4))
        config = NetworkConfig.from_dict(json.loads(fh.read(cfg_len).decode()))
        (count,) = struct.unpack("<I", fh.read(4))
        params: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode()
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            n_items = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(4 * n_items), dtype=np.float32)
            params[name] = data.reshape(shape).astype(float)
    return config, params
