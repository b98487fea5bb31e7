"""Exact exhaustive inner-product search: the correctness oracle."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatchError, ValidationError
from .quant import QuantizedVectors


class FlatIndex:
    """Brute-force MIPS over a dense matrix (optionally int8-quantized).

    Scores are true inner products against the stored (dequantized when
    quantized) vectors; ties break by ascending id.
    """

    kind = "flat"

    def __init__(self, vectors: np.ndarray | QuantizedVectors, ids: np.ndarray):
        count, dim = vectors.shape
        ids = np.asarray(ids, dtype=np.int64)
        if ids.shape != (count,):
            raise ValidationError(f"ids length {ids.shape} does not match {count} vectors")
        if len(np.unique(ids)) != count:
            raise ValidationError("ids must be unique")
        self.store = vectors
        self.ids = ids
        self.dim = dim
        self._dense: np.ndarray | None = None

    def __len__(self) -> int:
        return int(self.ids.shape[0])

    @property
    def quantized(self) -> bool:
        return isinstance(self.store, QuantizedVectors)

    def dense_matrix(self) -> np.ndarray:
        if self._dense is None:
            if isinstance(self.store, QuantizedVectors):
                self._dense = self.store.dequantize()
            else:
                self._dense = np.asarray(self.store, dtype=np.float32)
        return self._dense

    def search(self, query: np.ndarray, k: int) -> list[tuple[int, float]]:
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        query = np.asarray(query, dtype=np.float32)
        if query.shape != (self.dim,):
            raise DimensionMismatchError(
                f"query dim {query.shape} does not match index dim {self.dim}"
            )
        n = len(self)
        if n == 0:
            return []
        scores = self.dense_matrix() @ query
        k = min(k, n)
        # lexsort: primary key last -> sort by (-score, id)
        order = np.lexsort((self.ids, -scores))[:k]
        return [(int(self.ids[i]), float(scores[i])) for i in order]


def build_flat(vectors: np.ndarray | QuantizedVectors, ids: np.ndarray) -> FlatIndex:
    return FlatIndex(vectors, ids)


def search_flat(index: FlatIndex, query: np.ndarray, k: int) -> list[tuple[int, float]]:
    return index.search(query, k)
