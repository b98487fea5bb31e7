"""Binary persistence for flat and HNSW indexes.

Layout (all little-endian): magic "PAQI", u16 version, u16 kind, u32 dim,
u64 count, u16 quantization mode, u16 reserved; HNSW adds a params block
(u32 m, u32 ef_construction, u32 ef_search, u64 seed, i64 entry,
i32 max_level); then ids, the vector payload (fp32 rows, or int8 codes
preceded by per-dim scales/offsets), and for HNSW the graph arrays. A
load -> save cycle reproduces the file byte for byte.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import MagicError, TruncatedFileError, ValidationError
from .flat import FlatIndex
from .hnsw import HnswIndex, HnswParams
from .quant import QuantizedVectors

INDEX_MAGIC = b"PAQI"
INDEX_VERSION = 1
_KIND_FLAT = 0
_KIND_HNSW = 1
_QUANT_NONE = 0
_QUANT_INT8 = 1


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFileError(
                f"{self.path}: needed {n} bytes at offset {self.pos}, "
                f"file has {len(self.data)}"
            )
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: np.dtype, count: int) -> np.ndarray:
        raw = self.take(int(count) * dtype.itemsize)
        return np.frombuffer(raw, dtype=dtype).copy()

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ValidationError(
                f"{self.path}: {len(self.data) - self.pos} trailing bytes after payload"
            )


def save_index(index: FlatIndex | HnswIndex, path: str | Path) -> None:
    path = Path(path)
    parts: list[bytes] = []
    kind = _KIND_HNSW if index.kind == "hnsw" else _KIND_FLAT
    quantized = isinstance(index.store, QuantizedVectors)
    count = len(index)
    parts.append(INDEX_MAGIC)
    parts.append(struct.pack("<HHIQHH", INDEX_VERSION, kind, index.dim, count,
                             _QUANT_INT8 if quantized else _QUANT_NONE, 0))
    if kind == _KIND_HNSW:
        p = index.params
        parts.append(struct.pack("<IIIQqi", p.m, p.ef_construction, p.ef_search,
                                 p.seed, index.entry, index.max_level))
    parts.append(np.ascontiguousarray(index.ids, dtype=np.int64).tobytes())
    if quantized:
        store: QuantizedVectors = index.store
        parts.append(store.scales.tobytes())
        parts.append(store.offsets.tobytes())
        parts.append(np.ascontiguousarray(store.codes).tobytes())
    else:
        parts.append(np.ascontiguousarray(index.store, dtype=np.float32).tobytes())
    if kind == _KIND_HNSW:
        parts.append(np.ascontiguousarray(index.levels, dtype=np.int32).tobytes())
        parts.append(struct.pack("<QQ", index.adj.shape[0], index.deg.shape[0]))
        parts.append(np.ascontiguousarray(index.adj, dtype=np.int32).tobytes())
        parts.append(np.ascontiguousarray(index.deg, dtype=np.int32).tobytes())
    with path.open("wb") as fh:
        fh.write(b"".join(parts))


def load_index(path: str | Path) -> FlatIndex | HnswIndex:
    path = Path(path)
    reader = _Reader(path.read_bytes(), path)
    magic = reader.take(4)
    if magic != INDEX_MAGIC:
        raise MagicError(f"{path}: bad magic {magic!r}, expected {INDEX_MAGIC!r}")
    version, kind, dim, count, quant, _ = reader.unpack("<HHIQHH")
    if version != INDEX_VERSION:
        raise MagicError(f"{path}: unsupported version {version}")
    if kind not in (_KIND_FLAT, _KIND_HNSW):
        raise MagicError(f"{path}: unknown index kind {kind}")
    if quant not in (_QUANT_NONE, _QUANT_INT8):
        raise MagicError(f"{path}: unknown quantization mode {quant}")
    params = None
    entry = max_level = 0
    if kind == _KIND_HNSW:
        m, efc, efs, seed, entry, max_level = reader.unpack("<IIIQqi")
        params = HnswParams(m=m, ef_construction=efc, ef_search=efs, seed=seed)
    ids = reader.array(np.dtype(np.int64), count)
    if quant == _QUANT_INT8:
        scales = reader.array(np.dtype(np.float32), dim)
        offsets = reader.array(np.dtype(np.float32), dim)
        codes = reader.array(np.dtype(np.int8), count * dim).reshape(count, dim)
        store: np.ndarray | QuantizedVectors = QuantizedVectors(codes, scales, offsets)
    else:
        store = reader.array(np.dtype(np.float32), count * dim).reshape(count, dim)
    if kind == _KIND_FLAT:
        reader.done()
        return FlatIndex(store, ids)
    levels = reader.array(np.dtype(np.int32), count)
    adj_len, deg_len = reader.unpack("<QQ")
    adj = reader.array(np.dtype(np.int32), adj_len)
    deg = reader.array(np.dtype(np.int32), deg_len)
    reader.done()
    m = params.m
    block = 2 * m + levels.astype(np.int64) * m
    adj_off = np.zeros(count, dtype=np.int64)
    deg_block = levels.astype(np.int64) + 1
    deg_off = np.zeros(count, dtype=np.int64)
    if count > 0:
        adj_off[1:] = np.cumsum(block)[:-1]
        deg_off[1:] = np.cumsum(deg_block)[:-1]
    if int(block.sum()) != adj_len or int(deg_block.sum()) != deg_len:
        raise ValidationError(f"{path}: graph array lengths disagree with levels")
    return HnswIndex(store, ids, params, levels, adj, adj_off, deg, deg_off,
                     entry, max_level)
