"""Scoring candidate lists against ground truth, and ranking models.

Covers the whole measurement kit: recall at one or more cutoffs, recall per
clone type, precision over expert judgments, the ``max_individual``
baseline, dense ranking, Borda-count aggregation across datasets, and the
symmetric difference between two models' pair sets.

Ground truth is a set of canonical function-triple pairs, optionally typed
with one of the clone-type labels T1, T2, VST3, ST3, MT3, WT3/T4. Matching
a candidate to a truth pair is ``exact`` (triples equal) by default, or
``overlap`` (same paths, line-interval overlap ratio of at least theta on
both sides, ratio measured against the shorter interval) for line-drifted
corpora.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyGroundTruth,
    EmptyLabels,
    FormatViolation,
    MissingRank,
    UntypedPairs,
)
from .search import Triple

CLONE_TYPES = ("T1", "T2", "VST3", "ST3", "MT3", "WT3/T4")

Pair = tuple[Triple, Triple]


def canonical_pair(a: Triple, b: Triple) -> Pair:
    a, b = tuple(a), tuple(b)
    if a == b:
        raise ValueError(f"degenerate pair {a}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class GroundTruth:
    """Canonical true-clone pairs, optionally typed (all or none)."""

    pairs: frozenset[Pair]
    types: Mapping[Pair, str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset(self.pairs))
        if self.types is not None:
            types = dict(self.types)
            object.__setattr__(self, "types", types)
            for pair, label in types.items():
                if label not in CLONE_TYPES:
                    raise ValueError(f"unknown clone type {label!r} for {pair}")
            untyped = self.pairs - set(types)
            if untyped:
                raise ValueError(f"{len(untyped)} pairs missing a type label")

    def __len__(self) -> int:
        return len(self.pairs)

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[Triple, Triple]],
                   types: Iterable[str] | None = None) -> "GroundTruth":
        canon = [canonical_pair(a, b) for a, b in pairs]
        if types is None:
            return GroundTruth(frozenset(canon))
        types = list(types)
        if len(types) != len(canon):
            raise ValueError("types must align with pairs")
        mapping: dict[Pair, str] = {}
        for pair, label in zip(canon, types):
            if pair in mapping and mapping[pair] != label:
                raise ValueError(f"pair {pair} labelled twice with different types")
            mapping[pair] = label
        return GroundTruth(frozenset(canon), mapping)


def _pairs_of(candidates) -> list[Pair]:
    """Accept CandidateList/FusedList/iterables of Candidate or pairs."""
    items = getattr(candidates, "items", candidates)
    out: list[Pair] = []
    for item in items:
        if hasattr(item, "pair"):
            out.append(item.pair)
        else:
            out.append(canonical_pair(item[0], item[1]))
    return out


def _interval_overlap_ok(x: tuple[int, int], y: tuple[int, int], theta: float) -> bool:
    inter = min(x[1], y[1]) - max(x[0], y[0]) + 1
    if inter <= 0:
        return False
    shorter = min(x[1] - x[0] + 1, y[1] - y[0] + 1)
    return inter / shorter >= theta


def _triples_match(t1: Triple, t2: Triple, mode: str, theta: float) -> bool:
    if mode == "exact":
        return t1 == t2
    if t1[0] != t2[0]:
        return False
    return _interval_overlap_ok((t1[1], t1[2]), (t2[1], t2[2]), theta)


def match_pair(candidate, gt: GroundTruth, mode: str = "exact",
               theta: float = 0.7) -> bool:
    """Does this candidate hit any ground-truth pair under ``mode``?"""
    return bool(_matching_truth(candidate, gt, mode, theta))


def _matching_truth(candidate, gt: GroundTruth, mode: str, theta: float) -> set[Pair]:
    if mode not in ("exact", "overlap"):
        raise ValueError(f"unknown match mode {mode!r}")
    pair = candidate.pair if hasattr(candidate, "pair") else canonical_pair(*candidate)
    if mode == "exact":
        return {pair} if pair in gt.pairs else set()
    hits = set()
    for truth in gt.pairs:
        aligned = (
            _triples_match(pair[0], truth[0], mode, theta)
            and _triples_match(pair[1], truth[1], mode, theta)
        ) or (
            _triples_match(pair[0], truth[1], mode, theta)
            and _triples_match(pair[1], truth[0], mode, theta)
        )
        if aligned:
            hits.add(truth)
    return hits


@dataclass(frozen=True)
class RecallReport:
    """Recall at each cutoff plus their arithmetic mean, in percent."""

    cutoffs: tuple[int, ...]
    recall_at: Mapping[int, float]
    average: float

    def __post_init__(self):
        object.__setattr__(self, "cutoffs", tuple(self.cutoffs))
        object.__setattr__(self, "recall_at", dict(self.recall_at))
        values = [self.recall_at[k] for k in self.cutoffs]
        if abs(self.average - (sum(values) / len(values))) > 1e-9:
            raise ValueError("average must be the arithmetic mean of the recalls")

    @staticmethod
    def from_values(cutoffs: Sequence[int], values: Sequence[float]) -> "RecallReport":
        if len(cutoffs) != len(values) or not cutoffs:
            raise ValueError("cutoffs and values must align and be non-empty")
        mapping = dict(zip(cutoffs, values))
        return RecallReport(tuple(cutoffs), mapping, sum(values) / len(values))


def recall_at(candidates, gt: GroundTruth, cutoffs: Sequence[int],
              mode: str = "exact", theta: float = 0.7) -> RecallReport:
    """Recall@K for each cutoff: matched truth pairs in the top K, over all
    truth pairs, times 100."""
    if len(gt) == 0:
        raise EmptyGroundTruth("ground truth has no pairs")
    cutoffs = list(cutoffs)
    if not cutoffs or sorted(cutoffs) != cutoffs:
        raise ValueError("cutoffs must be non-empty and ascending")
    pairs = _pairs_of(candidates)
    matched: set[Pair] = set()
    recalls: dict[int, float] = {}
    position = 0
    for cutoff in cutoffs:
        while position < min(cutoff, len(pairs)):
            matched |= _matching_truth(pairs[position], gt, mode, theta)
            position += 1
        recalls[cutoff] = 100.0 * len(matched) / len(gt)
    return RecallReport.from_values(cutoffs, [recalls[k] for k in cutoffs])


def typed_recall(candidates, gt: GroundTruth, mode: str = "exact",
                 theta: float = 0.7) -> tuple[dict[str, float], float]:
    """Per-clone-type recall plus the unweighted mean over types present.

    A type with no truth pairs is reported as absent rather than 0/0.
    """
    if len(gt) == 0:
        raise EmptyGroundTruth("ground truth has no pairs")
    if gt.types is None:
        raise UntypedPairs("typed recall needs a fully typed ground truth")
    matched: set[Pair] = set()
    for pair in _pairs_of(candidates):
        matched |= _matching_truth(pair, gt, mode, theta)
    per_type: dict[str, float] = {}
    for label in CLONE_TYPES:
        truth_t = [p for p, t in gt.types.items() if t == label]
        if not truth_t:
            continue
        hits = sum(1 for p in truth_t if p in matched)
        per_type[label] = 100.0 * hits / len(truth_t)
    average = sum(per_type.values()) / len(per_type)
    return per_type, average


def precision(labels: Sequence) -> float:
    """TP / (TP + FP) * 100 over an ordered judgment list.

    Labels may be booleans or the strings ``TP``/``FP``.
    """
    labels = list(labels)
    if not labels:
        raise EmptyLabels("no judgments to score")
    tp = 0
    for label in labels:
        if isinstance(label, str):
            if label not in ("TP", "FP"):
                raise ValueError(f"unknown label {label!r}")
            tp += label == "TP"
        else:
            tp += bool(label)
    return 100.0 * tp / len(labels)


def max_individual(list_a, list_b, gt: GroundTruth, cutoff: int,
                   mode: str = "exact", theta: float = 0.7) -> float:
    """The better single model's recall at ``cutoff`` — the bar an ensemble
    of the two models has to beat."""
    recalls = []
    for clist in (list_a, list_b):
        if len(_pairs_of(clist)) == 0:
            recalls.append(0.0)
        else:
            recalls.append(recall_at(clist, gt, [cutoff], mode, theta).recall_at[cutoff])
    return max(recalls)


# --- ranking -------------------------------------------------------------------

def dense_rank(values: Mapping[str, float], descending: bool = True) -> dict[str, int]:
    """Dense ranking: ties share a rank; the next distinct value takes the
    next integer."""
    if not values:
        raise ValueError("nothing to rank")
    distinct = sorted(set(values.values()), reverse=descending)
    rank_of = {v: i + 1 for i, v in enumerate(distinct)}
    return {model: rank_of[v] for model, v in values.items()}


@dataclass(frozen=True)
class BordaTable:
    """Cross-dataset Borda aggregation, ordered by total count descending."""

    models: tuple[str, ...]
    datasets: tuple[str, ...]
    per_dataset_rank: Mapping[tuple[str, str], int]
    per_dataset_borda: Mapping[tuple[str, str], int]
    total: Mapping[str, int]
    rank_stdev: Mapping[str, float]

    def rows(self) -> list[dict]:
        out = []
        for model in self.models:
            out.append({
                "model": model,
                "ranks": {d: self.per_dataset_rank[(model, d)] for d in self.datasets},
                "borda": {d: self.per_dataset_borda[(model, d)] for d in self.datasets},
                "total": self.total[model],
                "rank_stdev": self.rank_stdev[model],
            })
        return out


def borda(ranks_by_dataset: Mapping[str, Mapping[str, int]]) -> BordaTable:
    """Aggregate per-dataset dense ranks into Borda counts.

    Per dataset, Borda count = N + 1 - rank with N the number of models;
    totals are summed across datasets and the ranking spread is the sample
    standard deviation of each model's ranks. Output rows are ordered by
    total descending, breaking ties by the per-dataset rank tuple and then
    the model id, which keeps the table deterministic.
    """
    datasets = tuple(ranks_by_dataset.keys())
    if not datasets:
        raise MissingRank("no datasets given")
    models = sorted(ranks_by_dataset[datasets[0]].keys())
    if not models:
        raise MissingRank("no models ranked")
    n_models = len(models)
    per_rank: dict[tuple[str, str], int] = {}
    per_borda: dict[tuple[str, str], int] = {}
    total: dict[str, int] = {m: 0 for m in models}
    for dataset in datasets:
        ranking = ranks_by_dataset[dataset]
        for model in models:
            if model not in ranking:
                raise MissingRank(f"model {model!r} has no rank for dataset {dataset!r}")
            rank = int(ranking[model])
            count = n_models + 1 - rank
            per_rank[(model, dataset)] = rank
            per_borda[(model, dataset)] = count
            total[model] += count
    stdev: dict[str, float] = {}
    for model in models:
        ranks = np.array([per_rank[(model, d)] for d in datasets], dtype=np.float64)
        stdev[model] = float(ranks.std(ddof=1)) if len(ranks) > 1 else 0.0
    ordered = sorted(
        models,
        key=lambda m: (-total[m], tuple(per_rank[(m, d)] for d in datasets), m),
    )
    return BordaTable(
        models=tuple(ordered),
        datasets=datasets,
        per_dataset_rank=per_rank,
        per_dataset_borda=per_borda,
        total=total,
        rank_stdev=stdev,
    )


def symmetric_difference(list_a, list_b) -> tuple[frozenset[Pair], int]:
    """Pairs found by exactly one of the two lists, and how many."""
    pa = frozenset(_pairs_of(list_a))
    pb = frozenset(_pairs_of(list_b))
    diff = (pa | pb) - (pa & pb)
    return diff, len(diff)


# --- persistence and report rendering -------------------------------------------

def load_ground_truth(path: str | Path) -> GroundTruth:
    """CSV rows: a_path,a_start,a_end,b_path,b_start,b_end[,type]."""
    path = Path(path)
    pairs: list[tuple[Triple, Triple]] = []
    types: list[str] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) not in (6, 7):
                raise FormatViolation(f"expected 6 or 7 fields, got {len(row)}", line=lineno)
            try:
                a = (row[0], int(row[1]), int(row[2]))
                b = (row[3], int(row[4]), int(row[5]))
            except ValueError as exc:
                raise FormatViolation(str(exc), line=lineno) from None
            pairs.append((a, b))
            if len(row) == 7:
                types.append(row[6])
    if types and len(types) != len(pairs):
        raise FormatViolation("either every pair is typed or none is")
    return GroundTruth.from_pairs(pairs, types or None)


def store_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for pair in sorted(gt.pairs):
            row = [pair[0][0], pair[0][1], pair[0][2], pair[1][0], pair[1][1], pair[1][2]]
            if gt.types is not None:
                row.append(gt.types[pair])
            writer.writerow(row)


def render_table(headers: Sequence[str], rows: Sequence[Sequence], floatfmt: str = ".2f") -> str:
    """Aligned plain-text table (cutoff columns + average, like the reports)."""
    def fmt(value):
        if isinstance(value, float):
            return format(value, floatfmt)
        return str(value)

    cells = [[fmt(v) for v in row] for row in rows]
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in cells)) if cells else len(headers[i])
        for i in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in cells:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(row))))
    return "\n".join(lines)
