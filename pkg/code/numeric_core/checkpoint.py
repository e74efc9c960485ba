"""RGT1 checkpoint container.

Layout, all integers little-endian::

    b"RGT1" | u32 version | u32 meta_len | meta (UTF-8 JSON) | u32 count
    count x ( u32 name_len | name | u32 rank | rank x u64 dim | <f8 data )
"""
import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from errors import DataFormatError

logger = logging.getLogger(__name__)

MAGIC = b'RGT1'
VERSION = 1


@dataclass
class ModelCheckpoint:
    tensors: dict[str, np.ndarray]
    metadata: dict[str, Any] = field(default_factory=dict)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {name: arr.shape for name, arr in self.tensors.items()}


def encode_checkpoint(checkpoint: ModelCheckpoint) -> bytes:
    meta = json.dumps(checkpoint.metadata, sort_keys=True, ensure_ascii=False).encode('utf-8')
    parts = [MAGIC, struct.pack('<I', VERSION), struct.pack('<I', len(meta)), meta,
             struct.pack('<I', len(checkpoint.tensors))]
    for name, arr in checkpoint.tensors.items():
        raw_name = name.encode('utf-8')
        arr = np.asarray(arr).astype('<f8', order='C')
        parts.append(struct.pack('<I', len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack('<I', arr.ndim))
        parts.append(struct.pack(f'<{arr.ndim}Q', *arr.shape))
        parts.append(arr.tobytes())
    return b''.join(parts)


def decode_checkpoint(blob: bytes) -> ModelCheckpoint:
    offset = 0

    def read(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(blob):
            raise DataFormatError('checkpoint is truncated')
        chunk = blob[offset:offset + n]
        offset += n
        return chunk

    if read(4) != MAGIC:
        raise DataFormatError('not an RGT1 checkpoint (bad magic)')
    (version,) = struct.unpack('<I', read(4))
    if version != VERSION:
        raise DataFormatError(f'unsupported checkpoint version {version}')
    (meta_len,) = struct.unpack('<I', read(4))
    metadata = json.loads(read(meta_len).decode('utf-8'))
    (count,) = struct.unpack('<I', read(4))

    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack('<I', read(4))
        name = read(name_len).decode('utf-8')
        (rank,) = struct.unpack('<I', read(4))
        dims = struct.unpack(f'<{rank}Q', read(8 * rank))
        size = int(np.prod(dims)) if rank else 1
        data = np.frombuffer(read(8 * size), dtype='<f8').astype(np.float64).reshape(dims)
        tensors[name] = data
    if offset != len(blob):
        raise DataFormatError(f'checkpoint has {len(blob) - offset} trailing bytes')
    return ModelCheckpoint(tensors=tensors, metadata=metadata)


def save_checkpoint(path: str | Path, tensors: Mapping[str, np.ndarray], metadata: dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(ModelCheckpoint(dict(tensors), metadata)))
    logger.debug('wrote checkpoint %s (%d tensors)', path, len(tensors))
    return path


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'Cannot find checkpoint {path}')
    return decode_checkpoint(path.read_bytes())
