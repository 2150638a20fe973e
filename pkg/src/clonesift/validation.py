"""Input validation helpers shared across the engine.

These mirror the role of sklearn's ``check_array``-style utilities: coerce
loosely-typed input into the canonical representation and fail early with a
clear message.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, TooFewVectors


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting NaN/inf."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_float_vector(y, name: str = "y") -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting NaN/inf."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_vector(vector, dimension: int, unit_id: str) -> np.ndarray:
    """Validate one embedding vector: length, finiteness, nonzero norm."""
    arr = np.asarray(vector, dtype=np.float32)
    if arr.ndim != 1 or arr.shape[0] != dimension:
        raise DimensionMismatch(
            f"unit {unit_id}: expected vector of length {dimension}, got shape {arr.shape}"
        )
    if not np.isfinite(arr).all():
        raise ValueError(f"unit {unit_id}: vector contains non-finite components")
    if not np.any(arr):
        raise ValueError(f"unit {unit_id}: zero vector")
    return arr


def check_records(records: Sequence, minimum: int = 2):
    """Validate a batch of EmbeddingRecords destined for one index.

    All records must share a model id and dimension; at least ``minimum``
    records are required.
    """
    if len(records) < minimum:
        raise TooFewVectors(
            f"need at least {minimum} embedding records, got {len(records)}"
        )
    model_id = records[0].model_id
    dimension = len(records[0].vector)
    for rec in records:
        if rec.model_id != model_id:
            raise ValueError(
                f"mixed model ids in one batch: {model_id!r} vs {rec.model_id!r}"
            )
        if len(rec.vector) != dimension:
            raise DimensionMismatch(
                f"unit {rec.unit_id}: dimension {len(rec.vector)} != {dimension}"
            )
    return model_id, dimension


def check_unique_ids(units: Iterable) -> None:
    """Reject duplicate unit ids."""
    seen: set[str] = set()
    for unit in units:
        if unit.id in seen:
            from .errors import DuplicateId

            raise DuplicateId(f"duplicate unit id {unit.id} ({unit.path}:{unit.start_line})")
        seen.add(unit.id)
