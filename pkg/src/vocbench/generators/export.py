"""Flat binary weight records for checkpoints and cross-language export.

Layout: magic ``VBW1``, little-endian u32 version, u64 record count, then
per record a u16 name length, the UTF-8 layer path, a u8 dtype code, a u8
rank, u32 dims and the raw little-endian payload. Generator exports use
f32 payloads; checkpoints reuse the container for optimizer counters and
RNG blobs via the other dtype codes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import torch
from torch import nn

from ..audio_io import _atomic_write

MAGIC = b"VBW1"
VERSION = 1

_DTYPES = {0: "<f4", 1: "<f8", 2: "<i8", 3: "|u1"}
_CODES = {v: k for k, v in _DTYPES.items()}


class WeightFormatError(ValueError):
    """The file is not a complete, well-formed weight-record container."""


def write_records(path: str | Path, records: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<IQ", VERSION, len(records))]
    for name, array in records.items():
        data = np.ascontiguousarray(array)
        code = _CODES.get(data.dtype.str)
        if code is None:
            data = np.ascontiguousarray(array, dtype="<f4")
            code = _CODES[data.dtype.str]
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", code, data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    payload = b"".join(chunks)
    _atomic_write(path, lambda tmp: Path(tmp).write_bytes(payload))


def read_records(path: str | Path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise WeightFormatError(f"{path}: not a weight-record file")
    version, count = struct.unpack("<IQ", blob[4:16])
    if version != VERSION:
        raise WeightFormatError(f"{path}: unsupported version {version}")
    records: dict[str, np.ndarray] = {}
    offset = 16
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset : offset + name_len].decode("utf-8")
            offset += name_len
            code, ndim = struct.unpack_from("<BB", blob, offset)
            offset += 2
            shape = struct.unpack_from(f"<{ndim}I", blob, offset)
            offset += 4 * ndim
            dtype = np.dtype(_DTYPES[code])
            nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            if offset + nbytes > len(blob):
                raise WeightFormatError(f"{path}: truncated record {name!r}")
            records[name] = (
                np.frombuffer(blob[offset : offset + nbytes], dtype=dtype)
                .reshape(shape)
                .copy()
            )
            offset += nbytes
    except (struct.error, KeyError) as exc:
        raise WeightFormatError(f"{path}: corrupt weight records ({exc})") from exc
    if offset != len(blob):
        raise WeightFormatError(f"{path}: {len(blob) - offset} trailing bytes")
    return records


def export_weights(module: nn.Module, path: str | Path) -> None:
    """Write every trainable parameter as an f32 record keyed by layer path."""
    records = {
        name: param.detach().cpu().numpy().astype("<f4")
        for name, param in module.named_parameters()
    }
    write_records(path, records)


def load_weights(module: nn.Module, path: str | Path) -> None:
    records = read_records(path)
    params = dict(module.named_parameters())
    missing = sorted(set(params) - set(records))
    extra = sorted(set(records) - set(params))
    if missing or extra:
        raise WeightFormatError(
            f"{path}: parameter names do not match (missing {missing[:3]}, extra {extra[:3]})"
        )
    with torch.no_grad():
        for name, param in params.items():
            value = torch.from_numpy(records[name])
            if tuple(value.shape) != tuple(param.shape):
                raise WeightFormatError(
                    f"{path}: shape mismatch for {name}: {tuple(value.shape)} "
                    f"vs {tuple(param.shape)}"
                )
            param.copy_(value.to(param.dtype))
