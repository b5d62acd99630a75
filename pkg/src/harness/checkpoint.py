"""Binary checkpoint format.

Layout, all integers little-endian u32::

    b"GRAFTCKPT" | version | spec_len | spec JSON (UTF-8) | tensor count
    per tensor:  name_len | name (UTF-8) | rank | extents... | float32 LE values
    CRC32 of every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from src.errors import CheckpointCorruptionError
from src.nn.params import ParameterStore
from src.utils.logger import get_logger

logger = get_logger("checkpoint")

MAGIC = b"GRAFTCKPT"
VERSION = 1
_U32 = struct.Struct("<I")


@dataclass
class Checkpoint:
    version: int
    spec_json: str
    tensors: dict[str, np.ndarray]


def encode_checkpoint(tensors: Mapping[str, np.ndarray], spec_json: str = "") -> bytes:
    spec_bytes = spec_json.encode("utf-8")
    parts = [MAGIC, _U32.pack(VERSION), _U32.pack(len(spec_bytes)), spec_bytes, _U32.pack(len(tensors))]
    for name, array in tensors.items():
        encoded = name.encode("utf-8")
        values = np.ascontiguousarray(array, dtype="<f4")
        parts.append(_U32.pack(len(encoded)))
        parts.append(encoded)
        parts.append(_U32.pack(values.ndim))
        parts.extend(_U32.pack(extent) for extent in values.shape)
        parts.append(values.tobytes())
    body = b"".join(parts)
    return body + _U32.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, count: int) -> bytes:
        end = self.offset + count
        if end > len(self.data):
            raise CheckpointCorruptionError(
                f"checkpoint truncated: needed {count} bytes at offset {self.offset}"
            )
        chunk = self.data[self.offset : end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]


def decode_checkpoint(data: bytes) -> Checkpoint:
    """Parse checkpoint bytes.

    Raises:
        CheckpointCorruptionError: On a bad magic, checksum, truncation or
            trailing garbage
    """
    if len(data) < len(MAGIC) + 4 * 4 or not data.startswith(MAGIC):
        raise CheckpointCorruptionError("not a checkpoint: missing GRAFTCKPT header")
    body, stored = data[:-4], _U32.unpack(data[-4:])[0]
    if zlib.crc32(body) != stored:
        raise CheckpointCorruptionError(
            f"checksum mismatch: stored {stored:#010x}, computed {zlib.crc32(body):#010x}"
        )

    reader = _Reader(body)
    reader.take(len(MAGIC))
    version = reader.u32()
    if version != VERSION:
        raise CheckpointCorruptionError(f"unsupported checkpoint version {version}")
    try:
        spec_json = reader.take(reader.u32()).decode("utf-8")
        tensors: dict[str, np.ndarray] = {}
        for _ in range(reader.u32()):
            name = reader.take(reader.u32()).decode("utf-8")
            shape = tuple(reader.u32() for _ in range(reader.u32()))
            count = int(np.prod(shape, dtype=np.int64))
            values = np.frombuffer(reader.take(4 * count), dtype="<f4")
            tensors[name] = values.reshape(shape).copy()
    except UnicodeDecodeError as exc:
        raise CheckpointCorruptionError(f"undecodable name or spec: {exc}") from exc
    if reader.offset != len(body):
        raise CheckpointCorruptionError(f"{len(body) - reader.offset} unexpected trailing bytes")
    return Checkpoint(version=version, spec_json=spec_json, tensors=tensors)


def save_checkpoint(store: ParameterStore, path: Union[str, Path], spec_json: str = "") -> Path:
    """Write every parameter of ``store`` (as float32) to ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = encode_checkpoint(store.state_dict(), spec_json)
    path.write_bytes(data)
    logger.info("checkpoint_saved", path=str(path), tensors=len(store), bytes=len(data))
    return path


def load_checkpoint(path: Union[str, Path], store: Optional[ParameterStore] = None) -> Checkpoint:
    """Read a checkpoint and, when ``store`` is given, copy it into the store.

    Raises:
        CheckpointCorruptionError: If the file is damaged
        CheckpointCompatibilityError: If names or shapes differ from ``store``
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise CheckpointCorruptionError(f"cannot read {path}: {exc}") from exc
    checkpoint = decode_checkpoint(data)
    if store is not None:
        store.load_state_dict(checkpoint.tensors)
    logger.info("checkpoint_loaded", path=str(path), tensors=len(checkpoint.tensors))
    return checkpoint
