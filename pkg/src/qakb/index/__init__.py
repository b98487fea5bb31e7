"""Inner-product search indexes over unit-normalized question vectors."""

from .flat import FlatIndex, build_flat, search_flat
from .hnsw import HnswIndex, HnswParams, build_hnsw, search_hnsw
from .quant import QuantizationSpec, QuantizedVectors, quantize
from .storage import load_index, save_index

__all__ = [
    "FlatIndex",
    "HnswIndex",
    "HnswParams",
    "QuantizationSpec",
    "QuantizedVectors",
    "build_flat",
    "build_hnsw",
    "load_index",
    "quantize",
    "save_index",
    "search_flat",
    "search_hnsw",
]
