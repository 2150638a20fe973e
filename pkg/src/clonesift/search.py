"""Vector index and ranked clone-candidate lists.

The search layer turns one model's embedding records into a ranked list of
candidate pairs under four knobs: per-unit clone-class size (``top_n_class``),
a similarity floor (``similarity_threshold``), a global cap on returned pairs
(``global_top_k``), and the backend (``exact`` brute-force cosine, or the
``approximate`` small-world graph).

Semantics, in order:

1. every unit's clone class = its ``top_n_class`` nearest neighbours with
   score >= threshold (self and same-triple pairs always excluded);
2. pairs are canonicalized (lexicographically smaller triple first) and
   deduplicated keeping the maximum observed score;
3. the union is sorted by score descending with ties broken by the canonical
   pair key, then truncated to ``global_top_k``.

Everything downstream relies on that deterministic ordering: the top-K list
is always a prefix of the top-(K+1) list, and repeated runs are
byte-identical.

Candidate-list files are a JSON header line (model id plus a parameter echo)
followed by CSV rows ``a_path,a_start,a_end,b_path,b_start,b_end,score``
with scores at 6 decimal digits. Loading re-canonicalizes the order, so the
interchange format has 6-decimal score resolution.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import CorpusManifest
from .embed import EmbeddingRecord
from .errors import FormatViolation, ModelMismatch, ParamsMismatch, UnknownUnit
from .smallworld import SmallWorldGraph
from .validation import check_records

Triple = tuple[str, int, int]

SCORE_DECIMALS = 6
_SCORE_EPS = 10.0 ** (-SCORE_DECIMALS)


@dataclass(frozen=True)
class SearchParams:
    """The candidate-list knobs.

    ``similarity_threshold`` is nominally a cosine in [-1, 1] but any finite
    value is accepted; a threshold above 1 simply yields an empty list.
    """

    top_n_class: int = 10
    similarity_threshold: float = 0.0
    global_top_k: int = 1000
    metric: str = "cosine"
    backend: str = "exact"

    def __post_init__(self):
        if self.top_n_class < 1:
            raise ValueError("top_n_class must be >= 1")
        if self.global_top_k < 1:
            raise ValueError("global_top_k must be >= 1")
        if not math.isfinite(self.similarity_threshold):
            raise ValueError("similarity_threshold must be finite")
        if self.metric != "cosine":
            raise ValueError(f"unsupported metric {self.metric!r}")
        if self.backend not in ("exact", "approximate"):
            raise ValueError(f"unknown backend {self.backend!r}")

    def to_dict(self) -> dict:
        return {
            "top_n_class": self.top_n_class,
            "similarity_threshold": self.similarity_threshold,
            "global_top_k": self.global_top_k,
            "metric": self.metric,
            "backend": self.backend,
        }


@dataclass(frozen=True)
class Candidate:
    """An unordered pair of function triples with a similarity score.

    Stored canonically: ``a`` is the lexicographically smaller triple.
    """

    a: Triple
    b: Triple
    score: float

    def __post_init__(self):
        a, b = tuple(self.a), tuple(self.b)
        if a == b:
            raise ValueError(f"degenerate pair {a}")
        if b < a:
            a, b = b, a
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score for pair {a} / {b}")

    @property
    def pair(self) -> tuple[Triple, Triple]:
        return (self.a, self.b)


def sort_candidates(items: Iterable[Candidate]) -> tuple[Candidate, ...]:
    """Deterministic global order: score descending, then canonical pair key."""
    return tuple(sorted(items, key=lambda c: (-c.score, c.pair)))


@dataclass(frozen=True)
class CandidateList:
    """A model's ranked output. ``params`` is None for derived lists
    (normalized/re-scored), in which case the threshold check is skipped."""

    model_id: str
    params: SearchParams | None
    items: tuple[Candidate, ...]

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        seen: set[tuple[Triple, Triple]] = set()
        previous: Candidate | None = None
        for cand in items:
            if cand.pair in seen:
                raise ValueError(f"duplicate canonical pair {cand.pair}")
            seen.add(cand.pair)
            if previous is not None and (-previous.score, previous.pair) > (-cand.score, cand.pair):
                raise ValueError("items are not in canonical sorted order")
            previous = cand
        if self.params is not None:
            if len(items) > self.params.global_top_k:
                raise ValueError(
                    f"{len(items)} items exceed global_top_k {self.params.global_top_k}"
                )
            floor = self.params.similarity_threshold - _SCORE_EPS
            for cand in items:
                if cand.score < floor:
                    raise ValueError(
                        f"score {cand.score} below similarity threshold "
                        f"{self.params.similarity_threshold}"
                    )

    def __len__(self) -> int:
        return len(self.items)

    def pair_set(self) -> frozenset[tuple[Triple, Triple]]:
        return frozenset(c.pair for c in self.items)

    def truncated(self, k: int) -> "CandidateList":
        params = replace(self.params, global_top_k=k) if self.params is not None else None
        return CandidateList(self.model_id, params, self.items[:k])


def _registry(units) -> dict[str, Triple]:
    if isinstance(units, CorpusManifest):
        units = units.units
    if isinstance(units, Mapping):
        return {str(k): tuple(v) for k, v in units.items()}
    reg: dict[str, Triple] = {}
    for unit in units:
        reg[unit.id] = unit.triple
    return reg


class CloneSearchIndex(BaseEstimator):
    """Cosine index over one model's embeddings, exact or approximate.

    Vectors are L2-normalized at insertion so cosine reduces to a dot
    product. The exact backend is the reference; the approximate backend is
    a navigable small-world graph gated by :func:`ann_recall`.

    Parameters mirror the graph knobs and are inert for ``backend='exact'``.
    """

    def __init__(self, backend: str = "exact", m: int = 16,
                 ef_construction: int = 128, ef_search: int = 256,
                 random_state: int = 0):
        self.backend = backend
        self.m = m
        self.ef_construction = ef_construction
        self.ef_search = ef_search
        self.random_state = random_state

    # -- fitting ------------------------------------------------------------

    def fit(self, records: Sequence[EmbeddingRecord], units) -> "CloneSearchIndex":
        """Index one model's records. ``units`` supplies id -> triple."""
        if self.backend not in ("exact", "approximate"):
            raise ValueError(f"unknown backend {self.backend!r}")
        model_id, dimension = check_records(records, minimum=2)
        registry = _registry(units)
        matrix = np.empty((len(records), dimension), dtype=np.float64)
        ids = []
        for row, rec in enumerate(records):
            if rec.unit_id not in registry:
                raise UnknownUnit(f"record {rec.unit_id} has no corpus unit")
            matrix[row] = rec.as_array()
            ids.append(rec.unit_id)
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError("zero vector cannot be indexed")
        matrix /= norms

        self.model_id_ = model_id
        self.dimension_ = dimension
        self.matrix_ = matrix
        self.unit_ids_ = tuple(ids)
        self.triples_ = tuple(registry[uid] for uid in ids)
        self.row_of_ = {uid: i for i, uid in enumerate(ids)}
        # Ranks used for unit-id tie-breaks, precomputed for vectorized sorts.
        order = sorted(range(len(ids)), key=lambda i: ids[i])
        ranks = np.empty(len(ids), dtype=np.int64)
        for rank, row in enumerate(order):
            ranks[row] = rank
        self.id_rank_ = ranks
        if self.backend == "approximate":
            graph = SmallWorldGraph(
                dimension, m=self.m, ef_construction=self.ef_construction,
                random_state=self.random_state,
            )
            graph.add_items(matrix.astype(np.float32))
            self.graph_ = graph
        return self

    def _check_fitted(self):
        if not hasattr(self, "matrix_"):
            raise RuntimeError("index is not fitted; call fit(records, units) first")

    # -- querying -----------------------------------------------------------

    def _neighbor_rows(self, query_vec: np.ndarray, k: int,
                       exclude_row: int | None) -> tuple[np.ndarray, np.ndarray]:
        """Rows and scores of the top-k neighbours of a query vector."""
        if self.backend == "approximate":
            extra = 1 if exclude_row is not None else 0
            rows, scores = self.graph_.query(
                query_vec.astype(np.float32), k + extra, ef_search=max(self.ef_search, k + extra)
            )
            if exclude_row is not None:
                keep = rows != exclude_row
                rows, scores = rows[keep], scores[keep]
            # Re-score against the float64 matrix so both backends report
            # identical similarities for identical pairs.
            scores = self.matrix_[rows] @ query_vec
            order = np.lexsort((self.id_rank_[rows], -scores))
            rows, scores = rows[order], scores[order]
            return rows[:k], scores[:k]
        scores = self.matrix_ @ query_vec
        rows = np.arange(len(scores))
        if exclude_row is not None:
            keep = rows != exclude_row
            rows, scores = rows[keep], scores[keep]
        if k < len(rows):
            # Preselect by score alone, then keep the whole tie group at the
            # k-th score so the unit-id tie-break stays exact.
            part = np.argpartition(-scores, k - 1)[:k]
            kth = scores[part].min()
            keep = scores >= kth
            rows, scores = rows[keep], scores[keep]
        order = np.lexsort((self.id_rank_[rows], -scores))
        rows, scores = rows[order], scores[order]
        return rows[:k], scores[:k]

    def kneighbors(self, unit_id: str, k: int) -> list[tuple[str, float]]:
        """Top-k neighbours of an indexed unit (self excluded)."""
        self._check_fitted()
        if k < 1:
            raise ValueError("k must be >= 1")
        if unit_id not in self.row_of_:
            raise UnknownUnit(f"unit {unit_id} is not indexed")
        row = self.row_of_[unit_id]
        rows, scores = self._neighbor_rows(self.matrix_[row], k, exclude_row=row)
        return [(self.unit_ids_[r], float(s)) for r, s in zip(rows, scores)]

    def _collect(self, pair_scores: dict, params: SearchParams, model_id: str) -> CandidateList:
        items = sort_candidates(
            Candidate(a=a, b=b, score=score) for (a, b), score in pair_scores.items()
        )[: params.global_top_k]
        return CandidateList(model_id=model_id, params=params, items=items)

    def self_search(self, params: SearchParams) -> CandidateList:
        """Clone classes within the indexed corpus, merged and ranked."""
        self._check_fitted()
        pair_scores: dict[tuple[Triple, Triple], float] = {}
        n = len(self.unit_ids_)
        for row in range(n):
            rows, scores = self._neighbor_rows(
                self.matrix_[row], params.top_n_class, exclude_row=row
            )
            keep = scores >= params.similarity_threshold
            for other, score in zip(rows[keep], scores[keep]):
                ta, tb = self.triples_[row], self.triples_[int(other)]
                if ta == tb:
                    continue  # same-(path,start,end) pairs are never candidates
                key = (ta, tb) if ta < tb else (tb, ta)
                prior = pair_scores.get(key)
                # Cosine is symmetric so both observations agree; max is a
                # safeguard for any future non-symmetric metric.
                if prior is None or score > prior:
                    pair_scores[key] = float(score)
        return self._collect(pair_scores, params, self.model_id_)

    def search_from(self, query_records: Sequence[EmbeddingRecord], query_units,
                    params: SearchParams) -> CandidateList:
        """Cross-corpus batch search: clone classes for each query unit over
        the indexed corpus only."""
        self._check_fitted()
        if not query_records:
            return CandidateList(self.model_id_, params, ())
        registry = _registry(query_units)
        pair_scores: dict[tuple[Triple, Triple], float] = {}
        for rec in query_records:
            if rec.model_id != self.model_id_:
                raise ModelMismatch(
                    f"query model {rec.model_id!r} != index model {self.model_id_!r}"
                )
            if rec.unit_id not in registry:
                raise UnknownUnit(f"query record {rec.unit_id} has no corpus unit")
            vec = rec.as_array().astype(np.float64)
            norm = np.linalg.norm(vec)
            if norm == 0.0:
                raise ValueError(f"unit {rec.unit_id}: zero query vector")
            vec /= norm
            rows, scores = self._neighbor_rows(vec, params.top_n_class, exclude_row=None)
            keep = scores >= params.similarity_threshold
            ta = registry[rec.unit_id]
            for other, score in zip(rows[keep], scores[keep]):
                tb = self.triples_[int(other)]
                if ta == tb:
                    continue
                key = (ta, tb) if ta < tb else (tb, ta)
                prior = pair_scores.get(key)
                if prior is None or score > prior:
                    pair_scores[key] = float(score)
        return self._collect(pair_scores, params, self.model_id_)


# --- spec-shaped functional wrappers -----------------------------------------

def build_index(records: Sequence[EmbeddingRecord], units,
                backend: str = "exact", **kwargs) -> CloneSearchIndex:
    return CloneSearchIndex(backend=backend, **kwargs).fit(records, units)


def knn(index: CloneSearchIndex, unit_id: str, k: int) -> list[tuple[str, float]]:
    return index.kneighbors(unit_id, k)


def self_search(index: CloneSearchIndex, params: SearchParams) -> CandidateList:
    return index.self_search(params)


def batch_search(index: CloneSearchIndex, query_records, query_units,
                 params: SearchParams) -> CandidateList:
    return index.search_from(query_records, query_units, params)


def ann_recall(exact_list: CandidateList, approx_list: CandidateList, k: int) -> float:
    """Fraction of the exact top-k pairs present in the approximate top-k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    pe, pa = exact_list.params, approx_list.params
    if pe is None or pa is None:
        raise ParamsMismatch("ann_recall needs raw search outputs with parameter echoes")
    if (pe.top_n_class, pe.similarity_threshold, pe.global_top_k, pe.metric) != (
        pa.top_n_class, pa.similarity_threshold, pa.global_top_k, pa.metric
    ):
        raise ParamsMismatch("candidate lists were produced under different parameters")
    if exact_list.model_id != approx_list.model_id:
        raise ParamsMismatch("candidate lists come from different models")
    exact_pairs = [c.pair for c in exact_list.items[:k]]
    if not exact_pairs:
        return 1.0
    approx_pairs = {c.pair for c in approx_list.items[:k]}
    hit = sum(1 for p in exact_pairs if p in approx_pairs)
    return hit / len(exact_pairs)


# --- candidate list persistence ----------------------------------------------

def store_candidates(clist: CandidateList, path: str | Path,
                     extra_header: dict | None = None) -> None:
    """Write the header record then one CSV row per candidate."""
    header = {"model_id": clist.model_id,
              "params": clist.params.to_dict() if clist.params else None}
    if extra_header:
        header.update(extra_header)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for cand in clist.items:
            writer.writerow([
                cand.a[0], cand.a[1], cand.a[2],
                cand.b[0], cand.b[1], cand.b[2],
                f"{cand.score:.{SCORE_DECIMALS}f}",
            ])


def load_candidates(path: str | Path) -> tuple[CandidateList, dict]:
    """Load a candidate (or fused) list file; returns (list, raw header)."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise FormatViolation("missing header record", line=1)
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise FormatViolation(f"invalid header: {exc}", line=1) from None
        items = []
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise FormatViolation(f"expected 7 fields, got {len(row)}", line=lineno)
            try:
                cand = Candidate(
                    a=(row[0], int(row[1]), int(row[2])),
                    b=(row[3], int(row[4]), int(row[5])),
                    score=float(row[6]),
                )
            except ValueError as exc:
                raise FormatViolation(str(exc), line=lineno) from None
            items.append(cand)
    params = SearchParams(**header["params"]) if header.get("params") else None
    clist = CandidateList(
        model_id=header.get("model_id", "unknown"),
        params=params,
        items=sort_candidates(items),
    )
    return clist, header
