"""Named-tensor checkpoint files with a JSON sidecar.

Layout (little-endian): magic ``AFCK``, version u32, count u32, then per tensor
name length u16, UTF-8 name, rank u8, dims u32 each, raw float32 data. A CRC-32
of everything before it closes the file.
"""
import hashlib
import json
import struct
import zlib
from pathlib import Path
from typing import Any, Dict, Mapping

import numpy as np
from loguru import logger

from .errors import CheckpointError

MAGIC = b"AFCK"
VERSION = 1
_HEADER = struct.Struct("<4sII")
_TRAILER = struct.Struct("<I")


def save_checkpoint(path: Path, tensors: Mapping[str, np.ndarray]) -> None:
    """Write ``tensors`` in insertion order. Values are stored as float32."""
    path = Path(path)
    parts = [_HEADER.pack(MAGIC, VERSION, len(tensors))]
    for name, value in tensors.items():
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise CheckpointError(f"Tensor name too long: {name[:40]}...")
        array = np.ascontiguousarray(value, dtype="<f4")
        if array.ndim > 0xFF:
            raise CheckpointError(f"Tensor {name} has rank {array.ndim}")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", array.ndim))
        parts.append(struct.pack(f"<{array.ndim}I", *array.shape))
        parts.append(array.tobytes())
    body = b"".join(parts)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(body + _TRAILER.pack(zlib.crc32(body)))
    logger.debug(f"Saved {len(tensors)} tensors to {path}")


def load_checkpoint(path: Path) -> Dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size + _TRAILER.size:
        raise CheckpointError(f"Checkpoint truncated: {path} has {len(raw)} bytes")
    body, (stored_crc,) = raw[: -_TRAILER.size], _TRAILER.unpack(raw[-_TRAILER.size :])
    if zlib.crc32(body) != stored_crc:
        raise CheckpointError(f"Checkpoint checksum mismatch: {path}")

    magic, version, count = _HEADER.unpack_from(body, 0)
    if magic != MAGIC:
        raise CheckpointError(f"Not a checkpoint file (magic {magic!r}): {path}")
    if version != VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version}, expected {VERSION}")

    tensors: Dict[str, np.ndarray] = {}
    offset = _HEADER.size
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            name = body[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", body, offset)
            offset += 1
            shape = struct.unpack_from(f"<{rank}I", body, offset)
            offset += 4 * rank
            size = int(np.prod(shape, dtype=np.int64)) * 4
            if offset + size > len(body):
                raise CheckpointError(f"Checkpoint truncated inside tensor {name}")
            tensors[name] = np.frombuffer(body, dtype="<f4", count=size // 4, offset=offset)
            tensors[name] = tensors[name].reshape(shape).astype(np.float32)
            offset += size
    except struct.error as e:
        raise CheckpointError(f"Checkpoint truncated: {e}") from e
    if offset != len(body):
        raise CheckpointError(f"Checkpoint has {len(body) - offset} trailing bytes")
    return tensors


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_metadata(path: Path, metadata: Mapping[str, Any]) -> None:
    """Write the JSON sidecar describing how the checkpoint was produced."""
    with open(sidecar_path(path), "w", encoding="utf-8") as f:
        json.dump(dict(metadata), f, indent=2, sort_keys=True)


def load_metadata(path: Path) -> Dict[str, Any]:
    side = sidecar_path(path)
    if not side.exists():
        raise CheckpointError(f"Checkpoint metadata missing: {side}")
    with open(side, "r", encoding="utf-8") as f:
        data: Dict[str, Any] = json.load(f)
    return data


def file_sha256(path: Path) -> str:
    """SHA256 of a file, read in chunks."""
    sha256 = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(8192), b""):
            sha256.update(chunk)
    return sha256.hexdigest()


def strip_prefix(tensors: Mapping[str, np.ndarray], prefix: str) -> Dict[str, np.ndarray]:
    """Entries under ``prefix`` with the prefix removed."""
    return {k[len(prefix) :]: v for k, v in tensors.items() if k.startswith(prefix)}
