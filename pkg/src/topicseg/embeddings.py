"""Sentence embedding sources.

Binary file layout (all little-endian)::

    header:  uint32 dimension, uint32 count
    record:  uint16 id_len, id_len bytes of utf-8 doc_id,
             uint32 sentence_index (1-based), dimension x float32

The JSONL variant holds one ``{"doc_id", "sentence_index", "vector"}`` object
per line.
"""
from __future__ import annotations

import json
import os
import struct
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import httpx
import numpy as np
from sklearn.feature_extraction.text import HashingVectorizer

from .exceptions import DimensionMismatch, MissingCredentials, ParseError, ProviderFailure

_HEADER = struct.Struct("<II")
_ID_LEN = struct.Struct("<H")
_SENT = struct.Struct("<I")


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector is zero."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, doc_id: str, sentences: Sequence[str]) -> np.ndarray: ...


def _check(vectors: np.ndarray, n: int, dimension: int) -> np.ndarray:
    if vectors.shape != (n, dimension):
        raise DimensionMismatch(f"expected {(n, dimension)} embeddings, got {vectors.shape}")
    if not np.all(np.isfinite(vectors)):
        raise ProviderFailure("embeddings contain non-finite values")
    return vectors


class PrecomputedEmbeddings:
    """Vectors looked up by ``(doc_id, sentence_index)``."""

    def __init__(self, table: dict[tuple[str, int], np.ndarray], dimension: int):
        self.table = table
        self.dimension = dimension
        for key, vec in table.items():
            if vec.shape != (dimension,):
                raise DimensionMismatch(f"vector for {key} has shape {vec.shape}, want ({dimension},)")

    def embed(self, doc_id: str, sentences: Sequence[str]) -> np.ndarray:
        try:
            rows = [self.table[(doc_id, i)] for i in range(1, len(sentences) + 1)]
        except KeyError as exc:
            raise ProviderFailure(f"no precomputed embedding for {exc.args[0]}") from None
        if not rows:
            return np.zeros((0, self.dimension))
        return _check(np.vstack(rows).astype(np.float64), len(sentences), self.dimension)

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "PrecomputedEmbeddings":
        dims = {a.shape[1] for a in arrays.values()}
        if len(dims) != 1:
            raise DimensionMismatch(f"mixed dimensions: {sorted(dims)}")
        table = {
            (doc_id, i + 1): np.asarray(row, dtype=np.float64)
            for doc_id, arr in arrays.items()
            for i, row in enumerate(arr)
        }
        return cls(table, dims.pop())

    @classmethod
    def load(cls, path: str | Path) -> "PrecomputedEmbeddings":
        path = Path(path)
        if path.suffix in (".jsonl", ".json"):
            return cls.from_jsonl(path)
        return cls.from_binary(path)

    @classmethod
    def from_binary(cls, path: str | Path) -> "PrecomputedEmbeddings":
        data = Path(path).read_bytes()
        if len(data) < _HEADER.size:
            raise ParseError("embeddings file shorter than its header")
        dimension, count = _HEADER.unpack_from(data, 0)
        pos = _HEADER.size
        table = {}
        for rec in range(count):
            try:
                (n,) = _ID_LEN.unpack_from(data, pos)
                pos += _ID_LEN.size
                doc_id = data[pos:pos + n].decode("utf-8")
                pos += n
                (sent,) = _SENT.unpack_from(data, pos)
                pos += _SENT.size
                end = pos + 4 * dimension
                if end > len(data):
                    raise struct.error("truncated vector")
                vec = np.frombuffer(data[pos:end], dtype="<f4").astype(np.float64)
                pos = end
            except (struct.error, UnicodeDecodeError) as exc:
                raise ParseError(f"record {rec}: {exc}") from exc
            table[(doc_id, sent)] = vec
        if pos != len(data):
            raise ParseError(f"{len(data) - pos} trailing bytes after {count} records")
        return cls(table, dimension)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "PrecomputedEmbeddings":
        table = {}
        dimension = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    key = (str(rec["doc_id"]), int(rec["sentence_index"]))
                    vec = np.asarray(rec["vector"], dtype=np.float64)
                except (ValueError, KeyError, TypeError) as exc:
                    raise ParseError(str(exc), lineno) from exc
                if dimension is None:
                    dimension = vec.shape[0]
                elif vec.shape != (dimension,):
                    raise DimensionMismatch(f"line {lineno}: vector has {vec.shape[0]} dims, want {dimension}")
                table[key] = vec
        return cls(table, dimension or 0)

    def records(self) -> Iterable[tuple[str, int, np.ndarray]]:
        for (doc_id, sent), vec in sorted(self.table.items()):
            yield doc_id, sent, vec

    def write_binary(self, path: str | Path) -> None:
        chunks = [_HEADER.pack(self.dimension, len(self.table))]
        for doc_id, sent, vec in self.records():
            raw = doc_id.encode("utf-8")
            chunks += [_ID_LEN.pack(len(raw)), raw, _SENT.pack(sent), vec.astype("<f4").tobytes()]
        Path(path).write_bytes(b"".join(chunks))

    def write_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for doc_id, sent, vec in self.records():
                fh.write(json.dumps({"doc_id": doc_id, "sentence_index": sent, "vector": vec.tolist()}) + "\n")


class RemoteEmbeddings:
    """HTTP endpoint taking ``{"input": [...]}`` and returning ``{"embeddings": [[...]]}``."""

    def __init__(
        self,
        url: str,
        dimension: int | None = None,
        api_key_env: str | None = None,
        timeout: float = 30.0,
        batch_size: int = 64,
        client: httpx.Client | None = None,
    ):
        self.url = url
        self.dimension = dimension
        self.batch_size = batch_size
        self._client = client or httpx.Client(timeout=timeout)
        self._headers = {}
        if api_key_env:
            token = os.environ.get(api_key_env, "").strip()
            if not token:
                raise MissingCredentials(f"environment variable {api_key_env} is not set")
            self._headers["Authorization"] = f"Bearer {token}"

    def __deepcopy__(self, memo):
        return self

    def embed(self, doc_id: str, sentences: Sequence[str]) -> np.ndarray:
        rows: list[list[float]] = []
        for i in range(0, len(sentences), self.batch_size):
            batch = list(sentences[i:i + self.batch_size])
            try:
                resp = self._client.post(self.url, json={"input": batch}, headers=self._headers)
                resp.raise_for_status()
                got = resp.json()["embeddings"]
            except (httpx.HTTPError, ValueError, KeyError, TypeError) as exc:
                raise ProviderFailure(f"embedding request failed: {exc}") from exc
            if len(got) != len(batch):
                raise ProviderFailure(f"asked for {len(batch)} embeddings, got {len(got)}")
            rows.extend(got)
        vectors = np.asarray(rows, dtype=np.float64)
        if self.dimension is None and len(rows):
            self.dimension = vectors.shape[1]
        return _check(vectors.reshape(len(rows), -1), len(sentences), self.dimension or 0)


class HashingEmbeddings:
    """Bag-of-words vectors via feature hashing. Lexical, offline, deterministic."""

    def __init__(self, dimension: int = 1024):
        self.dimension = dimension
        self._vectorizer = HashingVectorizer(
            n_features=dimension, alternate_sign=False, norm="l2", stop_words="english"
        )

    def embed(self, doc_id: str, sentences: Sequence[str]) -> np.ndarray:
        if not sentences:
            return np.zeros((0, self.dimension))
        return self._vectorizer.transform(list(sentences)).toarray()
