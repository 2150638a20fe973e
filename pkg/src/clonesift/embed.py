"""Embedding backends: one fixed-dimension vector per function unit per model.

Two production-shaped backends are provided:

* :class:`MockEmbedder` — deterministic character-trigram feature hashing.
  Local, seedable, and dependency-free; similar texts land close under
  cosine, which is what the search layer needs for end-to-end tests.
* :class:`RemoteEmbedder` — a batched client for an embedding sidecar
  speaking the ``/embed`` + ``/health`` wire protocol (JSON over loopback
  HTTP). Results are reassembled into input order, so callers observe
  deterministic ordering regardless of in-flight concurrency.

Both are sklearn-style transformers: ``transform(units)`` maps a list of
:class:`~clonesift.corpus.FunctionUnit` to a list of
:class:`EmbeddingRecord`.

The vector store is a per-model file: a header record (``model_id``,
``dimension``, ``normalized``) followed by either JSON-line rows or a binary
block (16-byte magic+version, then length-prefixed ids with little-endian
float32 rows). Both encodings round-trip; vectors are stored as 32-bit
floats.
"""

from __future__ import annotations

import hashlib
import json
import secrets
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import requests
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import FunctionUnit
from .errors import (
    DimensionMismatch,
    FormatViolation,
    ServiceError,
    TransportFailure,
    ZeroVector,
)

BACKENDS = ("mock", "remote", "file")


@dataclass(frozen=True)
class EmbedderSpec:
    """Declarative description of one scoring source."""

    backend: str
    model_id: str
    dimension: int
    code_length: int = 128
    seed: int = 0
    endpoint: str | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.code_length < 1:
            raise ValueError("code_length must be >= 1")
        if self.backend == "remote" and not self.endpoint:
            raise ValueError("remote backend requires an endpoint")


@dataclass(frozen=True)
class EmbeddingRecord:
    """One function unit's vector under one model."""

    unit_id: str
    model_id: str
    vector: tuple[float, ...]

    def __post_init__(self):
        arr = np.asarray(self.vector, dtype=np.float32)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError(f"unit {self.unit_id}: vector must be a non-empty 1-D array")
        if not np.isfinite(arr).all():
            raise ValueError(f"unit {self.unit_id}: vector has non-finite components")
        if not np.any(arr):
            raise ZeroVector(f"unit {self.unit_id}: zero vector rejected")
        object.__setattr__(self, "vector", tuple(float(x) for x in arr))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vector, dtype=np.float32)


class MockEmbedder(BaseEstimator, TransformerMixin):
    """Deterministic trigram-hashing embedder.

    The unit text is truncated to its first ``code_length`` whitespace
    tokens, the tokens are re-joined with single spaces, and every character
    trigram of the result is hashed (keyed BLAKE2b, keyed by ``seed``) into
    one of ``dimension`` signed buckets. The bucket histogram is then
    L2-normalized. Character trigrams, not word tokens, so identifier
    renames still overlap partially.

    Parameters
    ----------
    model_id : name under which records are emitted.
    dimension : length of the output vectors.
    code_length : max whitespace tokens kept before hashing.
    seed : hash key; different seeds give independent models.
    workers : thread count for batch embedding (output order is input order
        regardless).
    """

    def __init__(self, model_id: str = "mock", dimension: int = 256,
                 code_length: int = 128, seed: int = 0, workers: int = 1):
        self.model_id = model_id
        self.dimension = dimension
        self.code_length = code_length
        self.seed = seed
        self.workers = workers

    # Mock embedding is stateless; fit is a no-op for pipeline compatibility.
    def fit(self, units=None, y=None):
        return self

    def _embed_text(self, text: str, unit_id: str) -> np.ndarray:
        tokens = text.split()[: self.code_length]
        joined = " ".join(tokens)
        if len(joined) < 3:
            raise ZeroVector(f"unit {unit_id}: text has no character trigrams")
        key = int(self.seed).to_bytes(8, "little", signed=True)
        accum = np.zeros(self.dimension, dtype=np.float64)
        for i in range(len(joined) - 2):
            digest = hashlib.blake2b(
                joined[i : i + 3].encode("utf-8"), key=key, digest_size=8
            ).digest()
            value = int.from_bytes(digest, "little")
            sign = 1.0 if value & 1 else -1.0
            accum[(value >> 1) % self.dimension] += sign
        norm = float(np.linalg.norm(accum))
        if norm == 0.0:
            raise ZeroVector(f"unit {unit_id}: trigram buckets cancelled out")
        return (accum / norm).astype(np.float32)

    def transform(self, units: Sequence[FunctionUnit]) -> list[EmbeddingRecord]:
        units = list(units)
        if self.workers > 1 and len(units) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                vectors = list(pool.map(lambda u: self._embed_text(u.text, u.id), units))
        else:
            vectors = [self._embed_text(u.text, u.id) for u in units]
        return [
            EmbeddingRecord(unit_id=u.id, model_id=self.model_id, vector=tuple(v))
            for u, v in zip(units, vectors)
        ]


class RemoteEmbedder(BaseEstimator, TransformerMixin):
    """Client for an embedding sidecar speaking the ``/embed`` protocol.

    Requests are batched (``batch_size``, default 32) and may be in flight
    concurrently (``max_in_flight``, default 4); results are reassembled
    into input order. Association within a batch is positional, with an
    echo token to detect desynchronization. Transport failures are retried
    with exponential backoff, at most ``attempts`` tries per batch.
    """

    def __init__(self, endpoint: str, model_id: str, dimension: int,
                 code_length: int = 128, batch_size: int = 32,
                 max_in_flight: int = 4, attempts: int = 3,
                 backoff: float = 0.2, timeout: float = 30.0,
                 normalized: bool = False):
        self.endpoint = endpoint
        self.model_id = model_id
        self.dimension = dimension
        self.code_length = code_length
        self.batch_size = batch_size
        self.max_in_flight = max_in_flight
        self.attempts = attempts
        self.backoff = backoff
        self.timeout = timeout
        self.normalized = normalized

    def fit(self, units=None, y=None):
        return self

    def _post_batch(self, batch: Sequence[FunctionUnit]) -> list[EmbeddingRecord]:
        echo = secrets.token_hex(8)
        payload = {
            "model": self.model_id,
            "code_length": self.code_length,
            "texts": [u.text for u in batch],
            "echo": echo,
        }
        url = self.endpoint.rstrip("/") + "/embed"
        last_exc: Exception | None = None
        for attempt in range(self.attempts):
            try:
                response = requests.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                if attempt + 1 < self.attempts:
                    time.sleep(self.backoff * (2 ** attempt))
                continue
            return self._parse_response(response, batch, echo)
        raise TransportFailure(
            f"embedding endpoint {url} unreachable after {self.attempts} attempts: {last_exc}"
        )

    def _parse_response(self, response, batch, echo) -> list[EmbeddingRecord]:
        try:
            body = response.json()
        except ValueError:
            raise ServiceError(
                f"non-JSON response (HTTP {response.status_code}) from embedding service"
            ) from None
        if response.status_code != 200:
            detail = body.get("error", {})
            raise ServiceError(
                f"embedding service error ({detail.get('code', response.status_code)}): "
                f"{detail.get('message', response.text[:200])}"
            )
        if body.get("echo") != echo:
            raise ServiceError("echo token mismatch: request/response desynchronized")
        errors = body.get("errors") or []
        if errors:
            first = errors[0]
            unit = batch[first.get("index", 0)]
            raise ServiceError(
                f"unit {unit.id}: service reported {first.get('code')}: {first.get('message')}"
            )
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(batch):
            raise ServiceError(
                f"expected {len(batch)} vectors, got "
                f"{len(vectors) if isinstance(vectors, list) else type(vectors).__name__}"
            )
        records = []
        for unit, vec in zip(batch, vectors):
            arr = np.asarray(vec, dtype=np.float32)
            if arr.ndim != 1 or arr.shape[0] != self.dimension:
                raise DimensionMismatch(
                    f"unit {unit.id}: expected dimension {self.dimension}, got {arr.shape}"
                )
            if not np.isfinite(arr).all():
                raise ServiceError(f"unit {unit.id}: non-finite vector from service")
            records.append(
                EmbeddingRecord(unit_id=unit.id, model_id=self.model_id, vector=tuple(arr))
            )
        return records

    def transform(self, units: Sequence[FunctionUnit]) -> list[EmbeddingRecord]:
        units = list(units)
        batches = [units[i : i + self.batch_size] for i in range(0, len(units), self.batch_size)]
        if not batches:
            return []
        if self.max_in_flight > 1 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=self.max_in_flight) as pool:
                results = list(pool.map(self._post_batch, batches))
        else:
            results = [self._post_batch(b) for b in batches]
        return [record for batch in results for record in batch]

    def health(self) -> dict:
        url = self.endpoint.rstrip("/") + "/health"
        try:
            response = requests.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportFailure(f"health check failed: {exc}") from None
        return response.json()


def build_embedder(spec: EmbedderSpec, workers: int = 1):
    """Instantiate the transformer described by an :class:`EmbedderSpec`."""
    if spec.backend == "mock":
        return MockEmbedder(
            model_id=spec.model_id, dimension=spec.dimension,
            code_length=spec.code_length, seed=spec.seed, workers=workers,
        )
    if spec.backend == "remote":
        return RemoteEmbedder(
            endpoint=spec.endpoint, model_id=spec.model_id,
            dimension=spec.dimension, code_length=spec.code_length,
        )
    raise ValueError(f"backend {spec.backend!r} has no in-process embedder (use load_vectors)")


# --- vector store ------------------------------------------------------------

_MAGIC = b"CLONESIFTVEC0001"  # fixed 16 bytes: magic + version


def store_vectors(records: Sequence[EmbeddingRecord], path: str | Path,
                  normalized: bool = True, encoding: str = "jsonl") -> None:
    """Persist one model's records; ``encoding`` is ``jsonl`` or ``binary``."""
    records = list(records)
    if not records:
        raise ValueError("refusing to store an empty record list")
    model_id = records[0].model_id
    dimension = len(records[0].vector)
    for rec in records:
        if rec.model_id != model_id:
            raise ValueError(f"mixed model ids: {model_id!r} vs {rec.model_id!r}")
        if len(rec.vector) != dimension:
            raise DimensionMismatch(
                f"unit {rec.unit_id}: dimension {len(rec.vector)} != {dimension}"
            )
    header = {"model_id": model_id, "dimension": dimension, "normalized": bool(normalized)}
    path = Path(path)
    if encoding == "jsonl":
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for rec in records:
                row = {
                    "unit_id": rec.unit_id,
                    "vector": [float(np.float32(x)) for x in rec.vector],
                }
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    elif encoding == "binary":
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
        with path.open("wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", len(header_bytes)))
            fh.write(header_bytes)
            for rec in records:
                uid = rec.unit_id.encode("utf-8")
                fh.write(struct.pack("<I", len(uid)))
                fh.write(uid)
                fh.write(np.asarray(rec.vector, dtype="<f4").tobytes())
    else:
        raise ValueError(f"unknown encoding {encoding!r}")


def _validate_loaded(records: list[EmbeddingRecord], header: dict) -> list[EmbeddingRecord]:
    dimension = int(header["dimension"])
    for rec in records:
        if len(rec.vector) != dimension:
            raise DimensionMismatch(
                f"unit {rec.unit_id}: dimension {len(rec.vector)} != header {dimension}"
            )
    if header.get("normalized"):
        for rec in records:
            norm = float(np.linalg.norm(rec.as_array()))
            if abs(norm - 1.0) > 1e-4:
                raise FormatViolation(
                    f"unit {rec.unit_id}: declared normalized but norm is {norm:.6f}"
                )
    return records


def load_vectors(path: str | Path, model_id: str | None = None) -> list[EmbeddingRecord]:
    """Load a vector store. A non-matching ``model_id`` filter yields []."""
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(_MAGIC):
        header, records = _load_binary(raw)
    else:
        header, records = _load_jsonl(raw)
    if model_id is not None and header["model_id"] != model_id:
        return []
    return _validate_loaded(records, header)


def _load_jsonl(raw: bytes):
    lines = raw.decode("utf-8").splitlines()
    if not lines:
        raise FormatViolation("empty vector store", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatViolation(f"invalid header: {exc}", line=1) from None
    for key in ("model_id", "dimension", "normalized"):
        if key not in header:
            raise FormatViolation(f"header missing key {key!r}", line=1)
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            records.append(
                EmbeddingRecord(
                    unit_id=row["unit_id"],
                    model_id=header["model_id"],
                    vector=tuple(np.asarray(row["vector"], dtype=np.float32)),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise FormatViolation(f"invalid vector row: {exc}", line=lineno) from None
    return header, records


def _load_binary(raw: bytes):
    offset = len(_MAGIC)
    if len(raw) < offset + 4:
        raise FormatViolation("truncated binary vector store")
    (header_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    try:
        header = json.loads(raw[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatViolation(f"invalid binary header: {exc}") from None
    offset += header_len
    dimension = int(header["dimension"])
    row_bytes = dimension * 4
    records = []
    while offset < len(raw):
        if offset + 4 > len(raw):
            raise FormatViolation("truncated record (id length)")
        (id_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        if offset + id_len + row_bytes > len(raw):
            raise FormatViolation("truncated record (payload)")
        unit_id = raw[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vector = np.frombuffer(raw, dtype="<f4", count=dimension, offset=offset)
        offset += row_bytes
        records.append(
            EmbeddingRecord(unit_id=unit_id, model_id=header["model_id"], vector=tuple(vector))
        )
    return header, records
