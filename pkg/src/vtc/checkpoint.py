"""Binary checkpoint container.

Layout (all integers little-endian u32, see docs/formats.md)::

    b"VTCK" | version | record count
    per record: name length | UTF-8 name | ndim | dims... | float32 payload
    trailer:    metadata length | UTF-8 JSON (sorted keys)

The JSON trailer carries the run configuration and vocabulary; tensor
records carry every trainable weight plus the candidate list ``beta``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

from .exceptions import FormatError

MAGIC = b"VTCK"
VERSION = 1
_U32 = struct.Struct("<I")


def _pack_u32(n: int) -> bytes:
    return _U32.pack(n)


def encode(records: Mapping[str, np.ndarray], meta: Mapping | None = None) -> bytes:
    parts = [MAGIC, _pack_u32(VERSION), _pack_u32(len(records))]
    for name, arr in records.items():
        arr = np.asarray(arr)
        raw = name.encode("utf-8")
        parts.append(_pack_u32(len(raw)))
        parts.append(raw)
        parts.append(_pack_u32(arr.ndim))
        parts.extend(_pack_u32(d) for d in arr.shape)
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    blob = json.dumps(meta or {}, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts.append(_pack_u32(len(blob)))
    parts.append(blob)
    return b"".join(parts)


def decode(buf: bytes) -> tuple[dict[str, np.ndarray], dict]:
    if buf[:4] != MAGIC:
        raise FormatError("not a VTCK checkpoint (bad magic)")
    pos = 4

    def u32():
        nonlocal pos
        if pos + 4 > len(buf):
            raise FormatError("truncated checkpoint")
        (v,) = _U32.unpack_from(buf, pos)
        pos += 4
        return v

    version = u32()
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    records: dict[str, np.ndarray] = {}
    for _ in range(u32()):
        n = u32()
        name = buf[pos : pos + n].decode("utf-8")
        pos += n
        shape = tuple(u32() for _ in range(u32()))
        size = int(np.prod(shape, dtype=np.int64)) * 4
        if pos + size > len(buf):
            raise FormatError(f"truncated payload for record {name!r}")
        records[name] = np.frombuffer(buf, dtype="<f4", count=size // 4, offset=pos).reshape(shape).astype(np.float32)
        pos += size
    n = u32()
    meta = json.loads(buf[pos : pos + n].decode("utf-8")) if n else {}
    return records, meta


def save(path, records: Mapping[str, np.ndarray], meta: Mapping | None = None) -> None:
    Path(path).write_bytes(encode(records, meta))


def load(path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc}") from exc
    return decode(buf)
