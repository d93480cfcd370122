"""Corpus records and the binary video-feature store."""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from ..exceptions import CorpusError, DimensionError, FormatError


@dataclass
class AnnotatedSentence:
    """A clean tagged sentence with blank positions that may be corrupted."""

    tokens: list[str]
    tags: list[str]
    blanks: list[int]
    video_id: str
    id: str = ""

    def __post_init__(self):
        if len(self.tags) != len(self.tokens):
            raise CorpusError(f"sentence {self.id!r}: {len(self.tokens)} tokens but {len(self.tags)} tags")
        for b in self.blanks:
            if not 0 <= b < len(self.tokens):
                raise CorpusError(f"sentence {self.id!r}: blank position {b} out of range")

    @property
    def answers(self) -> list[str]:
        return [self.tokens[b] for b in self.blanks]

    def to_json(self) -> dict:
        return {"id": self.id, "tokens": self.tokens, "tags": self.tags, "blanks": self.blanks, "video_id": self.video_id}

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotatedSentence":
        return cls(list(obj["tokens"]), list(obj["tags"]), [int(b) for b in obj["blanks"]], obj["video_id"], obj.get("id", ""))


@dataclass(frozen=True)
class Corruption:
    pos: int
    original: str
    replacement: str


@dataclass
class VtcSample:
    """A corrupted sentence. ``tokens`` already hold the replacement words."""

    tokens: list[str]
    tags: list[str]
    corruptions: list[Corruption]
    video_id: str
    id: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for c in self.corruptions:
            if not 0 <= c.pos < len(self.tokens):
                raise CorpusError(f"sample {self.id!r}: corruption position {c.pos} out of range")
            if self.tokens[c.pos] != c.replacement:
                raise CorpusError(f"sample {self.id!r}: token at {c.pos} is not the recorded replacement")

    @property
    def k(self) -> int:
        return len(self.corruptions)

    @property
    def positions(self) -> list[int]:
        return [c.pos for c in self.corruptions]

    def source_tokens(self) -> list[str]:
        out = list(self.tokens)
        for c in self.corruptions:
            out[c.pos] = c.original
        return out

    def to_json(self) -> dict:
        obj = {
            "tokens": self.tokens,
            "tags": self.tags,
            "corruptions": [{"pos": c.pos, "original": c.original, "replacement": c.replacement} for c in self.corruptions],
            "video_id": self.video_id,
        }
        if self.id:
            obj["id"] = self.id
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "VtcSample":
        try:
            corr = [Corruption(int(c["pos"]), c["original"], c["replacement"]) for c in obj["corruptions"]]
            tokens = list(obj["tokens"])
            tags = list(obj.get("tags") or ["UNK"] * len(tokens))
            return cls(tokens, tags, corr, obj.get("video_id", ""), obj.get("id", ""))
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"malformed corpus record: {exc}") from exc


def write_jsonl(path, records: Iterable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def _read_jsonl(path) -> Iterator[dict]:
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read corpus {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from exc


def read_corpus(path) -> list[VtcSample]:
    return [VtcSample.from_json(o) for o in _read_jsonl(path)]


def read_sentences(path) -> list[AnnotatedSentence]:
    return [AnnotatedSentence.from_json(o) for o in _read_jsonl(path)]


def split_of(sentence_id: str) -> str:
    """80/10/10 train/val/test assignment from a hash of the sentence id."""
    bucket = int(hashlib.md5(sentence_id.encode("utf-8")).hexdigest(), 16) % 10
    return "train" if bucket < 8 else ("val" if bucket == 8 else "test")


_FEAT_MAGIC = b"VTCF"
_U32 = struct.Struct("<I")


class FeatureStore:
    """Mapping from video id to a fixed-width float32 feature vector."""

    def __init__(self, d_v: int, features: dict[str, np.ndarray] | None = None):
        self.d_v = d_v
        self._data: dict[str, np.ndarray] = {}
        for key, vec in (features or {}).items():
            self[key] = vec

    def __setitem__(self, key: str, vec) -> None:
        arr = np.asarray(vec, dtype=np.float32)
        if arr.shape != (self.d_v,):
            raise DimensionError(f"feature {key!r} has shape {arr.shape}, store expects ({self.d_v},)")
        if not np.all(np.isfinite(arr)):
            raise CorpusError(f"feature {key!r} has non-finite entries")
        self._data[key] = arr

    def __getitem__(self, key: str) -> np.ndarray:
        try:
            return self._data[key]
        except KeyError:
            raise CorpusError(f"no video feature for id {key!r}") from None

    def __contains__(self, key) -> bool:
        return key in self._data

    def __len__(self) -> int:
        return len(self._data)

    def keys(self):
        return self._data.keys()

    def to_bytes(self) -> bytes:
        parts = [_FEAT_MAGIC, _U32.pack(self.d_v), _U32.pack(len(self._data))]
        for key, vec in self._data.items():
            raw = key.encode("utf-8")
            parts += [_U32.pack(len(raw)), raw, vec.astype("<f4").tobytes()]
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "FeatureStore":
        if buf[:4] != _FEAT_MAGIC:
            raise FormatError("not a VTCF feature store (bad magic)")
        try:
            (d_v,) = _U32.unpack_from(buf, 4)
            (count,) = _U32.unpack_from(buf, 8)
            pos = 12
            store = cls(d_v)
            for _ in range(count):
                (n,) = _U32.unpack_from(buf, pos)
                pos += 4
                key = buf[pos : pos + n].decode("utf-8")
                pos += n
                if pos + 4 * d_v > len(buf):
                    raise FormatError("truncated feature store")
                store._data[key] = np.frombuffer(buf, dtype="<f4", count=d_v, offset=pos).astype(np.float32)
                pos += 4 * d_v
        except struct.error as exc:
            raise FormatError(f"truncated feature store: {exc}") from exc
        return store

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "FeatureStore":
        try:
            return cls.from_bytes(Path(path).read_bytes())
        except OSError as exc:
            raise FormatError(f"cannot read feature store {path}: {exc}") from exc
