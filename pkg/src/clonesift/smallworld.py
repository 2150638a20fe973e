"""Navigable small-world graph for approximate cosine search.

A layered proximity graph in the style of hierarchical navigable small-world
indexes: every node lives on layer 0, a geometrically thinning subset lives
on higher layers, and queries greedily descend from the top layer before
running a beam search over layer 0. Vectors must be unit-norm float32;
similarity is the dot product (cosine).

This backend is approximate by construction and is always gated by
``ann_recall`` against the exact index. Construction is deterministic for a
fixed ``random_state`` and insertion order.
"""

from __future__ import annotations

import heapq
import math

import numpy as np


class SmallWorldGraph:
    """Approximate nearest-neighbour graph over unit-norm vectors.

    Parameters
    ----------
    dimension : vector length.
    m : max out-degree on layers > 0; layer 0 allows ``2 * m``.
    ef_construction : beam width while inserting.
    random_state : seed for the (geometric) layer assignment.
    """

    def __init__(self, dimension: int, m: int = 16, ef_construction: int = 128,
                 random_state: int = 0):
        if m < 2:
            raise ValueError("m must be >= 2")
        self.dimension = dimension
        self.m = m
        self.m0 = 2 * m
        self.ef_construction = ef_construction
        self.random_state = random_state
        self._level_mult = 1.0 / math.log(m)
        self._matrix = np.empty((0, dimension), dtype=np.float32)
        self._levels: list[int] = []
        self._links: list[list[list[int]]] = []  # node -> layer -> neighbour rows
        self._entry: int | None = None
        self._max_level = -1

    def __len__(self) -> int:
        return len(self._levels)

    # -- construction ---------------------------------------------------------

    def add_items(self, matrix: np.ndarray) -> None:
        """Bulk-insert rows of a unit-norm float32 matrix."""
        matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[1] != self.dimension:
            raise ValueError(f"expected (n, {self.dimension}) matrix, got {matrix.shape}")
        rng = np.random.default_rng(self.random_state + len(self._levels))
        uniforms = rng.random(matrix.shape[0])
        base = len(self._levels)
        self._matrix = np.vstack([self._matrix, matrix]) if base else matrix.copy()
        for i in range(matrix.shape[0]):
            level = int(-math.log(max(uniforms[i], 1e-12)) * self._level_mult)
            self._insert(base + i, level)

    def _sims(self, query: np.ndarray, rows: list[int]) -> np.ndarray:
        return self._matrix[rows] @ query

    def _search_layer(self, query: np.ndarray, entries: list[tuple[float, int]],
                      layer: int, ef: int) -> list[tuple[float, int]]:
        """Beam search on one layer; returns up to ``ef`` (sim, row) pairs,
        similarity descending."""
        matrix = self._matrix
        links = self._links
        push, pop, pushpop = heapq.heappush, heapq.heappop, heapq.heappushpop
        visited = bytearray(len(links))
        for _, row in entries:
            visited[row] = 1
        # candidates: max-heap via negated sims; results: min-heap (worst first)
        candidates = [(-sim, row) for sim, row in entries]
        heapq.heapify(candidates)
        results = list(entries)
        heapq.heapify(results)
        while candidates:
            neg_sim, row = pop(candidates)
            if len(results) >= ef and -neg_sim < results[0][0]:
                break
            node_links = links[row]
            if layer >= len(node_links):
                continue
            neighbours = [nbr for nbr in node_links[layer] if not visited[nbr]]
            if not neighbours:
                continue
            for nbr in neighbours:
                visited[nbr] = 1
            sims = matrix[neighbours] @ query
            floor = results[0][0]
            full = len(results) >= ef
            for nbr, sim in zip(neighbours, sims.tolist()):
                if not full:
                    push(results, (sim, nbr))
                    push(candidates, (-sim, nbr))
                    full = len(results) >= ef
                    floor = results[0][0]
                elif sim > floor:
                    pushpop(results, (sim, nbr))
                    push(candidates, (-sim, nbr))
                    floor = results[0][0]
        results.sort(key=lambda t: (-t[0], t[1]))
        return results

    def _select_neighbours(self, candidates: list[tuple[float, int]], limit: int,
                           query: np.ndarray) -> list[int]:
        """Diversity-aware selection: keep a candidate only when it is closer
        to the query than to every neighbour already kept, then backfill."""
        if len(candidates) <= limit:
            return [row for _, row in candidates]
        kept: list[int] = []
        spare: list[int] = []
        for sim, row in candidates:  # already similarity-descending
            if len(kept) == limit:
                break
            if not kept:
                kept.append(row)
                continue
            to_kept = self._sims(self._matrix[row], kept)
            if sim >= float(to_kept.max()):
                kept.append(row)
            else:
                spare.append(row)
        for row in spare:
            if len(kept) == limit:
                break
            kept.append(row)
        return kept

    def _insert(self, row: int, level: int) -> None:
        self._levels.append(level)
        self._links.append([[] for _ in range(level + 1)])
        if self._entry is None:
            self._entry = row
            self._max_level = level
            return
        query = self._matrix[row]
        entry_sim = float(self._matrix[self._entry] @ query)
        beam = [(entry_sim, self._entry)]
        for layer in range(self._max_level, level, -1):
            beam = self._search_layer(query, beam, layer, ef=1)
        for layer in range(min(level, self._max_level), -1, -1):
            beam = self._search_layer(query, beam, layer, ef=self.ef_construction)
            limit = self.m0 if layer == 0 else self.m
            chosen = self._select_neighbours(beam, limit, query)
            self._links[row][layer] = list(chosen)
            for nbr in chosen:
                links = self._links[nbr][layer]
                links.append(row)
                if len(links) > limit:
                    sims = self._sims(self._matrix[nbr], links)
                    ranked = sorted(zip(sims, links), key=lambda t: (-t[0], t[1]))
                    self._links[nbr][layer] = self._select_neighbours(
                        [(float(s), r) for s, r in ranked], limit, self._matrix[nbr]
                    )
        if level > self._max_level:
            self._max_level = level
            self._entry = row

    # -- queries ----------------------------------------------------------------

    def query(self, query: np.ndarray, k: int, ef_search: int = 256):
        """Top-k rows by cosine similarity (approximate).

        Returns (rows, sims) as numpy arrays, similarity descending with row
        index as tie-break.
        """
        if self._entry is None:
            raise RuntimeError("graph is empty")
        query = np.ascontiguousarray(query, dtype=np.float32)
        entry_sim = float(self._matrix[self._entry] @ query)
        beam = [(entry_sim, self._entry)]
        for layer in range(self._max_level, 0, -1):
            beam = self._search_layer(query, beam, layer, ef=1)
        beam = self._search_layer(query, beam, 0, ef=max(ef_search, k))
        top = beam[:k]
        rows = np.array([row for _, row in top], dtype=np.int64)
        sims = np.array([sim for sim, _ in top], dtype=np.float64)
        return rows, sims
