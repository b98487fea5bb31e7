"""Hierarchical navigable small world index for inner-product search.

Vectors must be unit-normalized so that inner-product, cosine, and L2
rankings coincide; a guard rejects anything else. Builds are single-threaded
and deterministic given (vectors, ids, params): node levels come from a
seeded generator and every ordering tie-breaks by ascending id.
"""

from __future__ import annotations

import math
import threading
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatchError, ValidationError
from .hnsw_kernels import _build_graph, _knn_search
from .quant import QuantizationSpec, QuantizedVectors, quantize

NORM_TOLERANCE = 1e-3


@dataclass(frozen=True, slots=True)
class HnswParams:
    m: int = 32
    ef_construction: int = 80
    ef_search: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m < 4:
            raise ValidationError(f"m must be >= 4, got {self.m}")
        if self.ef_construction < self.m:
            raise ValidationError(
                f"ef_construction ({self.ef_construction}) must be >= m ({self.m})"
            )
        if self.ef_search < 1:
            raise ValidationError(f"ef_search must be >= 1, got {self.ef_search}")


class _ThreadScratch(threading.local):
    """Per-thread visited-marks array so concurrent searches never collide."""

    def __init__(self):
        self.visited = None
        self.epoch = 0

    def next_epoch(self, n: int) -> tuple[np.ndarray, int]:
        if self.visited is None or self.visited.shape[0] < n:
            self.visited = np.zeros(n, dtype=np.int64)
            self.epoch = 0
        self.epoch += 1
        return self.visited, self.epoch


class HnswIndex:
    kind = "hnsw"

    def __init__(
        self,
        store: np.ndarray | QuantizedVectors,
        ids: np.ndarray,
        params: HnswParams,
        levels: np.ndarray,
        adj: np.ndarray,
        adj_off: np.ndarray,
        deg: np.ndarray,
        deg_off: np.ndarray,
        entry: int,
        max_level: int,
    ):
        self.store = store
        self.ids = ids
        self.params = params
        self.levels = levels
        self.adj = adj
        self.adj_off = adj_off
        self.deg = deg
        self.deg_off = deg_off
        self.entry = entry
        self.max_level = max_level
        self.dim = store.shape[1]
        self._scratch = _ThreadScratch()

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def quantized(self) -> bool:
        return isinstance(self.store, QuantizedVectors)

    @classmethod
    def build(cls, vectors: np.ndarray, ids: np.ndarray, params: HnswParams) -> "HnswIndex":
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise ValidationError("build expects a 2-D vector matrix")
        n, dim = vectors.shape
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (n,):
            raise ValidationError(f"ids length {ids.shape} does not match {n} vectors")
        if len(np.unique(ids)) != n:
            raise ValidationError("ids must be unique")
        if n > 0:
            norms = np.linalg.norm(vectors, axis=1)
            bad = np.abs(norms - 1.0) > NORM_TOLERANCE
            if np.any(bad):
                first = int(np.argmax(bad))
                raise ValidationError(
                    f"vector at row {first} has norm {norms[first]:.6f}; "
                    "the index requires unit-normalized vectors"
                )
        # Insertion order = ascending id, so kernel tie-breaks on the internal
        # index agree with the documented ascending-id rule.
        order = np.argsort(ids, kind="stable")
        ids = ids[order]
        vectors = np.ascontiguousarray(vectors[order])

        m = params.m
        rng = np.random.default_rng(params.seed)
        if n > 0:
            mult = 1.0 / math.log(m)
            u = 1.0 - rng.random(n)  # (0, 1], avoids log(0)
            levels = np.floor(-np.log(u) * mult).astype(np.int32)
        else:
            levels = np.zeros(0, dtype=np.int32)

        block = 2 * m + levels.astype(np.int64) * m
        adj_off = np.zeros(n, dtype=np.int64)
        if n > 0:
            adj_off[1:] = np.cumsum(block)[:-1]
        adj = np.zeros(int(block.sum()), dtype=np.int32)
        deg_block = levels.astype(np.int64) + 1
        deg_off = np.zeros(n, dtype=np.int64)
        if n > 0:
            deg_off[1:] = np.cumsum(deg_block)[:-1]
        deg = np.zeros(int(deg_block.sum()), dtype=np.int32)

        if n == 0:
            entry, max_level = -1, -1
        elif n == 1:
            entry, max_level = 0, int(levels[0])
        else:
            entry, max_level = _build_graph(
                vectors, levels, m, params.ef_construction, adj, adj_off, deg, deg_off
            )
        return cls(vectors, ids, params, levels, adj, adj_off, deg, deg_off,
                   int(entry), int(max_level))

    def with_quantized_store(self, spec: QuantizationSpec | None = None) -> "HnswIndex":
        """Same graph, int8-quantized vector payload."""
        if self.quantized:
            raise ValidationError("store is already quantized")
        qv = quantize(np.asarray(self.store), spec or QuantizationSpec("int8-per-dim"))
        return HnswIndex(qv, self.ids, self.params, self.levels, self.adj,
                         self.adj_off, self.deg, self.deg_off, self.entry, self.max_level)

    def _query_parts(self, query: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
        query = np.asarray(query, dtype=np.float32)
        if query.shape != (self.dim,):
            raise DimensionMismatchError(
                f"query dim {query.shape} does not match index dim {self.dim}"
            )
        if isinstance(self.store, QuantizedVectors):
            qeff = query * self.store.scales
            qconst = float(query @ self.store.offsets)
            return self.store.codes, qeff, qconst
        return self.store, query, 0.0

    def search(self, query: np.ndarray, k: int, ef_search: int | None = None
               ) -> list[tuple[int, float]]:
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        ef = self.params.ef_search if ef_search is None else ef_search
        if k > ef:
            raise ValidationError(
                f"k={k} exceeds ef_search={ef}; raise ef_search to at least k"
            )
        n = len(self)
        if n == 0:
            return []
        vecs, qeff, qconst = self._query_parts(query)
        visited, epoch = self._scratch.next_epoch(n)
        dists, idxs = _knn_search(
            vecs, qeff, np.float32(qconst), self.adj, self.adj_off, self.deg,
            self.deg_off, self.params.m, self.entry, self.max_level, k, ef,
            visited, epoch,
        )
        return [(int(self.ids[i]), float(-d)) for d, i in zip(dists, idxs)]

    def neighbors(self, internal_idx: int, layer: int) -> np.ndarray:
        """Adjacency row for one node at one layer (diagnostics, BFS checks)."""
        m = self.params.m
        base = self.adj_off[internal_idx] + (0 if layer == 0 else 2 * m + (layer - 1) * m)
        dg = self.deg[self.deg_off[internal_idx] + layer]
        return self.adj[base:base + dg]

    def reachable_from_entry(self) -> int:
        """Number of nodes reachable from the entry point over layer 0."""
        n = len(self)
        if n == 0:
            return 0
        seen = np.zeros(n, dtype=bool)
        queue: deque[int] = deque([self.entry])
        seen[self.entry] = True
        count = 1
        while queue:
            cur = queue.popleft()
            for nb in self.neighbors(cur, 0):
                if not seen[nb]:
                    seen[nb] = True
                    count += 1
                    queue.append(int(nb))
        return count


def build_hnsw(vectors: np.ndarray, ids: np.ndarray, params: HnswParams | None = None
               ) -> HnswIndex:
    return HnswIndex.build(vectors, ids, params or HnswParams())


def search_hnsw(index: HnswIndex, query: np.ndarray, k: int,
                ef_search: int | None = None) -> list[tuple[int, float]]:
    return index.search(query, k, ef_search)
