"""
Binary checkpoint codec.

Layout (all integers little-endian u32, values little-endian f64):
    b"ICNF" | version | count | count x (name_len, name utf-8, rank, dims..., values...)
"""

from __future__ import annotations

import logging
import os
import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from src.errors import CheckpointError

logger = logging.getLogger(__name__)

MAGIC = b"ICNF"
VERSION = 1
_U32 = struct.Struct("<I")


def encode_checkpoint(arrays: Mapping[str, np.ndarray]) -> bytes:
    parts = [MAGIC, _U32.pack(VERSION), _U32.pack(len(arrays))]
    for name, value in arrays.items():
        value = np.asarray(value, dtype=np.float64)
        encoded = name.encode("utf-8")
        parts.append(_U32.pack(len(encoded)))
        parts.append(encoded)
        parts.append(_U32.pack(value.ndim))
        parts.extend(_U32.pack(d) for d in value.shape)
        parts.append(np.ascontiguousarray(value, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_checkpoint(blob: bytes) -> dict[str, np.ndarray]:
    if blob[:4] != MAGIC:
        raise CheckpointError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    offset = 4

    def read_u32() -> int:
        nonlocal offset
        if offset + 4 > len(blob):
            raise CheckpointError("truncated checkpoint header")
        (value,) = _U32.unpack_from(blob, offset)
        offset += 4
        return value

    version = read_u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    count = read_u32()
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        name_len = read_u32()
        if offset + name_len > len(blob):
            raise CheckpointError("truncated parameter name")
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        rank = read_u32()
        dims = tuple(read_u32() for _ in range(rank))
        n_bytes = 8 * int(np.prod(dims, dtype=np.int64))
        if offset + n_bytes > len(blob):
            raise CheckpointError(f"truncated values for parameter '{name}'")
        values = np.frombuffer(blob, dtype="<f8", count=n_bytes // 8, offset=offset)
        offset += n_bytes
        if name in arrays:
            raise CheckpointError(f"duplicate parameter '{name}'")
        arrays[name] = values.astype(np.float64).reshape(dims)
    if offset != len(blob):
        raise CheckpointError(f"{len(blob) - offset} trailing bytes after {count} parameters")
    return arrays


def write_checkpoint(path: str | Path, arrays: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode_checkpoint(arrays))
    os.replace(tmp, path)
    logger.debug(f"Wrote checkpoint {path} ({len(arrays)} parameters)")
    return path


def read_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())
