"""Score normalization and candidate-list fusion.

Two or more models' candidate lists are merged in two steps: each list's
scores are first rewritten by a normalization method, then duplicate pairs
across lists are resolved by an aggregation method. The twelve
``<normalization>_<aggregation>`` combinations are the ensembling methods;
their serialized names (``z-score_max``, ``rrf_sum``, ...) are the grid the
evaluation toolkit reports on.

Normalizations (per input list, over that list's full score set):

* ``non-norm`` — identity.
* ``min-max`` — ``(s - min) / (max - min)``; a degenerate list (all scores
  equal) maps to 0.5 so it neither dominates nor vanishes under sum/max.
* ``z-score`` — ``(s - mean) / stdev`` with the sample (n-1) standard
  deviation; a degenerate list maps to 0.0.
* ``rrf`` — reciprocal rank fusion ``1 / (rrf_k + rank)`` with 1-based ranks
  taken from the list's sorted order; depends on order only, never on the
  score scale.

Aggregations over a pair's duplicate scores: ``average``, ``sum``, ``max``.
A pair present in exactly one list keeps its single score unchanged under
all three, which makes ``sum`` reward cross-model agreement.

All functions are pure; fusing many model pairs in parallel needs no shared
state.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyList, FormatViolation, TooFewLists
from .search import SCORE_DECIMALS, Candidate, CandidateList, Triple

NORMALIZATIONS = ("non-norm", "min-max", "z-score", "rrf")
AGGREGATIONS = ("average", "sum", "max")


@dataclass(frozen=True)
class Normalization:
    kind: str = "non-norm"
    rrf_k: int = 60

    def __post_init__(self):
        if self.kind not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.kind!r}")
        if self.rrf_k < 1:
            raise ValueError("rrf_k must be >= 1")


@dataclass(frozen=True)
class Aggregation:
    kind: str = "max"

    def __post_init__(self):
        if self.kind not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.kind!r}")


def method_name(norm: Normalization, agg: Aggregation) -> str:
    """Serialized ensembling-method name, e.g. ``z-score_max``."""
    return f"{norm.kind}_{agg.kind}"


def parse_method(name: str, rrf_k: int = 60) -> tuple[Normalization, Aggregation]:
    kind, _, agg = name.rpartition("_")
    if kind not in NORMALIZATIONS or agg not in AGGREGATIONS:
        raise ValueError(f"unknown ensembling method {name!r}")
    return Normalization(kind=kind, rrf_k=rrf_k), Aggregation(kind=agg)


def all_methods(rrf_k: int = 60) -> list[tuple[Normalization, Aggregation]]:
    """The full 12-method grid, in a stable order."""
    return [
        (Normalization(kind=n, rrf_k=rrf_k), Aggregation(kind=a))
        for n in NORMALIZATIONS
        for a in AGGREGATIONS
    ]


@dataclass(frozen=True)
class FusedList:
    """A merged candidate list with per-item provenance.

    ``provenance`` is aligned with ``items``: the set of source models that
    contributed each pair.
    """

    source_models: tuple[str, ...]
    method: str
    items: tuple[Candidate, ...]
    provenance: tuple[frozenset[str], ...]

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "source_models", tuple(self.source_models))
        if len(self.provenance) != len(items):
            raise ValueError("provenance must align with items")
        allowed = set(self.source_models)
        seen: set[tuple[Triple, Triple]] = set()
        for cand, prov in zip(items, self.provenance):
            if cand.pair in seen:
                raise ValueError(f"duplicate canonical pair {cand.pair}")
            seen.add(cand.pair)
            if not prov or not prov <= allowed:
                raise ValueError(f"bad provenance {set(prov)} for pair {cand.pair}")

    def __len__(self) -> int:
        return len(self.items)

    def pair_set(self) -> frozenset[tuple[Triple, Triple]]:
        return frozenset(c.pair for c in self.items)


def normalize(clist: CandidateList, method: Normalization) -> CandidateList:
    """Rewrite a list's scores by one normalization; order never changes.

    The result carries ``params=None``: normalized scores are no longer
    bounded by the search threshold.
    """
    if method.kind == "non-norm":
        return CandidateList(clist.model_id, None, clist.items)
    if method.kind == "rrf":
        items = tuple(
            Candidate(c.a, c.b, 1.0 / (method.rrf_k + rank))
            for rank, c in enumerate(clist.items, start=1)
        )
        return CandidateList(clist.model_id, None, items)
    if not clist.items:
        raise EmptyList(f"{method.kind} normalization needs a non-empty list")
    scores = np.array([c.score for c in clist.items], dtype=np.float64)
    if method.kind == "min-max":
        lo, hi = float(scores.min()), float(scores.max())
        if hi == lo:
            rescored = np.full_like(scores, 0.5)
        else:
            rescored = (scores - lo) / (hi - lo)
    else:  # z-score
        if len(scores) < 2:
            rescored = np.zeros_like(scores)
        else:
            sd = float(scores.std(ddof=1))
            if sd == 0.0:
                rescored = np.zeros_like(scores)
            else:
                rescored = (scores - scores.mean()) / sd
    items = tuple(
        Candidate(c.a, c.b, float(s)) for c, s in zip(clist.items, rescored)
    )
    return CandidateList(clist.model_id, None, items)


def fuse(lists: Sequence[CandidateList], agg: Aggregation,
         global_top_k: int | None = None,
         method: str | None = None) -> FusedList:
    """Union the lists' pairs and resolve duplicates by ``agg``.

    Contributions are ordered by model id before aggregating, so fusion is
    commutative in its inputs (bit-for-bit, including float sums).
    """
    if len(lists) < 2:
        raise TooFewLists(f"fusion needs at least 2 lists, got {len(lists)}")
    contributions: dict[tuple[Triple, Triple], list[tuple[str, float]]] = {}
    for clist in lists:
        for cand in clist.items:
            contributions.setdefault(cand.pair, []).append((clist.model_id, cand.score))
    fused: list[tuple[Candidate, frozenset[str]]] = []
    for pair, contribs in contributions.items():
        contribs.sort()
        values = [score for _, score in contribs]
        if agg.kind == "max":
            score = max(values)
        elif agg.kind == "sum":
            score = float(sum(values))
        else:
            score = float(sum(values)) / len(values)
        fused.append(
            (Candidate(pair[0], pair[1], score), frozenset(m for m, _ in contribs))
        )
    fused.sort(key=lambda t: (-t[0].score, t[0].pair))
    if global_top_k is not None:
        fused = fused[:global_top_k]
    return FusedList(
        source_models=tuple(cl.model_id for cl in lists),
        method=method or f"?_{agg.kind}",
        items=tuple(c for c, _ in fused),
        provenance=tuple(p for _, p in fused),
    )


def ensemble(list_a: CandidateList, list_b: CandidateList,
             norm: Normalization, agg: Aggregation,
             global_top_k: int | None = None) -> FusedList:
    """Normalize each list independently, then fuse."""
    return fuse(
        [normalize(list_a, norm), normalize(list_b, norm)],
        agg,
        global_top_k=global_top_k,
        method=method_name(norm, agg),
    )


# --- persistence ---------------------------------------------------------------

def store_fused(flist: FusedList, path: str | Path) -> None:
    """Same row format as a candidate list, plus method/sources in the header."""
    header = {
        "model_id": "+".join(flist.source_models),
        "params": None,
        "method": flist.method,
        "sources": list(flist.source_models),
    }
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for cand, prov in zip(flist.items, flist.provenance):
            writer.writerow([
                cand.a[0], cand.a[1], cand.a[2],
                cand.b[0], cand.b[1], cand.b[2],
                f"{cand.score:.{SCORE_DECIMALS}f}",
                "|".join(sorted(prov)),
            ])


def load_fused(path: str | Path) -> FusedList:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise FormatViolation(f"invalid header: {exc}", line=1) from None
        if "method" not in header or "sources" not in header:
            raise FormatViolation("fused header must carry method and sources", line=1)
        rows: list[tuple[Candidate, frozenset[str]]] = []
        reader = csv.reader(fh)
        for lineno, parts in enumerate(reader, start=2):
            if not parts:
                continue
            if len(parts) != 8:
                raise FormatViolation(f"expected 8 fields, got {len(parts)}", line=lineno)
            try:
                cand = Candidate(
                    a=(parts[0], int(parts[1]), int(parts[2])),
                    b=(parts[3], int(parts[4]), int(parts[5])),
                    score=float(parts[6]),
                )
            except ValueError as exc:
                raise FormatViolation(str(exc), line=lineno) from None
            rows.append((cand, frozenset(parts[7].split("|"))))
    rows.sort(key=lambda t: (-t[0].score, t[0].pair))
    return FusedList(
        source_models=tuple(header["sources"]),
        method=header["method"],
        items=tuple(c for c, _ in rows),
        provenance=tuple(p for _, p in rows),
    )
