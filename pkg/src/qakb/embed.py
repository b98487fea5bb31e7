"""Question embedding.

One embedding function serves both queries and indexed questions (the index
is symmetric by design; there is deliberately no second embedder). Three
backends satisfy the same contract:

* feature-hash: deterministic signed feature hashing over word unigrams,
  word bigrams, and character 3/4/5-grams. A pure function of
  (text, dim, seed).
* external-file: precomputed vectors from a ``PAQV`` binary file, e.g.
  produced by a trained neural embedder.
* subprocess: line protocol against a child process (one question per line
  in, one line of dim space-separated decimal reals out).
"""

from __future__ import annotations

import hashlib
import re
import struct
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BackendError,
    DimensionMismatchError,
    MagicError,
    TruncatedFileError,
    ValidationError,
)
from .kb import KnowledgeBase

VECTOR_MAGIC = b"PAQV"
VECTOR_VERSION = 1
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.int8): 1}
_CODE_DTYPES = {0: np.dtype(np.float32), 1: np.dtype(np.int8)}

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

MIN_DIM = 8


@dataclass(frozen=True, slots=True)
class EmbedderSpec:
    """Configuration for an embedder backend.

    ``path`` is required for kind="external-file", ``command`` for
    kind="subprocess"; both are ignored by the feature-hash backend.
    """

    kind: str = "feature-hash"
    dim: int = 768
    seed: int = 0
    normalize: bool = True
    path: str | None = None
    command: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("feature-hash", "external-file", "subprocess"):
            raise ValidationError(f"unknown embedder kind {self.kind!r}")
        if self.dim < MIN_DIM:
            raise ValidationError(f"embedder dim must be >= {MIN_DIM}, got {self.dim}")


def _features(text: str) -> list[str]:
    tokens = _TOKEN_RE.findall(text.lower())
    feats = [f"u\x1f{t}" for t in tokens]
    feats.extend(f"b\x1f{a}\x1f{b}" for a, b in zip(tokens, tokens[1:]))
    for tok in tokens:
        for n in (3, 4, 5):
            if len(tok) >= n:
                feats.extend(f"c{n}\x1f{tok[i:i + n]}" for i in range(len(tok) - n + 1))
    return feats


def embed_text(text: str, spec: EmbedderSpec) -> np.ndarray:
    """Feature-hash a text into a float32 vector of spec.dim entries.

    Deterministic: identical (text, dim, seed) always produce the identical
    vector. Texts with no alphanumeric tokens embed to the zero vector.
    """
    if spec.kind != "feature-hash":
        raise ValidationError("embed_text requires a feature-hash spec")
    key = struct.pack("<q", spec.seed)
    vec = np.zeros(spec.dim, dtype=np.float32)
    for feat in _features(text):
        digest = hashlib.blake2b(feat.encode("utf-8"), digest_size=8, key=key).digest()
        h = int.from_bytes(digest, "little")
        idx = (h >> 1) % spec.dim
        vec[idx] += 1.0 if h & 1 else -1.0
    if spec.normalize:
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
    return vec


class FeatureHashEmbedder:
    """Stateless embedder wrapping :func:`embed_text`."""

    def __init__(self, spec: EmbedderSpec):
        if spec.kind != "feature-hash":
            raise ValidationError("FeatureHashEmbedder requires kind='feature-hash'")
        self.spec = spec
        self.dim = spec.dim

    def embed(self, text: str) -> np.ndarray:
        return embed_text(text, self.spec)

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, t in enumerate(texts):
            out[i] = embed_text(t, self.spec)
        return out


class SubprocessEmbedder:
    """Embedder speaking the line protocol to a child process."""

    def __init__(self, spec: EmbedderSpec):
        if spec.kind != "subprocess" or not spec.command:
            raise ValidationError("SubprocessEmbedder requires kind='subprocess' and a command")
        self.spec = spec
        self.dim = spec.dim
        self._proc = subprocess.Popen(
            spec.command,
            shell=True,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def _roundtrip(self, line: str) -> str:
        proc = self._proc
        if proc.poll() is not None:
            raise BackendError(f"embedder subprocess exited with {proc.returncode}")
        assert proc.stdin is not None and proc.stdout is not None
        proc.stdin.write(line.replace("\n", " ") + "\n")
        proc.stdin.flush()
        reply = proc.stdout.readline()
        if not reply:
            raise BackendError("embedder subprocess closed its output stream")
        return reply.strip()

    def embed(self, text: str) -> np.ndarray:
        parts = self._roundtrip(text).split()
        if len(parts) != self.dim:
            raise BackendError(
                f"embedder subprocess returned {len(parts)} values, expected {self.dim}"
            )
        vec = np.array([float(p) for p in parts], dtype=np.float32)
        if self.spec.normalize:
            norm = float(np.linalg.norm(vec))
            if norm > 0.0:
                vec /= norm
        return vec

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, t in enumerate(texts):
            out[i] = self.embed(t)
        return out

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.terminate()
            self._proc.wait(timeout=5)


def make_embedder(spec: EmbedderSpec):
    if spec.kind == "feature-hash":
        return FeatureHashEmbedder(spec)
    if spec.kind == "subprocess":
        return SubprocessEmbedder(spec)
    raise ValidationError(f"no runtime embedder for kind {spec.kind!r}")


def embed_kb(kb: KnowledgeBase, spec: EmbedderSpec) -> np.ndarray:
    """Embed every question in KB order; row i corresponds to kb.pairs[i]."""
    if spec.kind == "external-file":
        if not spec.path:
            raise ValidationError("external-file embedder spec requires a path")
        matrix = load_vectors(spec.path, expected_dim=spec.dim)
        if matrix.shape[0] != len(kb):
            raise ValidationError(
                f"vector file has {matrix.shape[0]} rows but KB has {len(kb)} pairs"
            )
        return matrix
    embedder = make_embedder(spec)
    try:
        return embedder.embed_batch(kb.questions())
    finally:
        if isinstance(embedder, SubprocessEmbedder):
            embedder.close()


def save_vectors(matrix: np.ndarray, path: str | Path) -> None:
    """Write a PAQV binary vector file (little-endian, row-major)."""
    if matrix.ndim != 2:
        raise ValidationError("save_vectors expects a 2-D matrix")
    dtype = np.dtype(matrix.dtype)
    if dtype not in _DTYPE_CODES:
        raise ValidationError(f"unsupported vector dtype {dtype} (use float32 or int8)")
    count, dim = matrix.shape
    header = VECTOR_MAGIC + struct.pack(
        "<HHIQ", VECTOR_VERSION, _DTYPE_CODES[dtype], dim, count
    )
    with Path(path).open("wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(matrix).tobytes())


def load_vectors(path: str | Path, expected_dim: int | None = None) -> np.ndarray:
    """Read a PAQV file, validating magic, version, dim, and payload length."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 20:
        raise TruncatedFileError(f"{path}: shorter than the 20-byte header")
    if data[:4] != VECTOR_MAGIC:
        raise MagicError(f"{path}: bad magic {data[:4]!r}, expected {VECTOR_MAGIC!r}")
    version, dtype_code, dim, count = struct.unpack("<HHIQ", data[4:20])
    if version != VECTOR_VERSION:
        raise MagicError(f"{path}: unsupported version {version}")
    if dtype_code not in _CODE_DTYPES:
        raise MagicError(f"{path}: unknown dtype code {dtype_code}")
    if expected_dim is not None and dim != expected_dim:
        raise DimensionMismatchError(
            f"{path}: stored dim {dim} != expected dim {expected_dim}"
        )
    dtype = _CODE_DTYPES[dtype_code]
    need = count * dim * dtype.itemsize
    payload = data[20:]
    if len(payload) < need:
        raise TruncatedFileError(
            f"{path}: payload has {len(payload)} bytes, header declares {need}"
        )
    arr = np.frombuffer(payload[:need], dtype=dtype).reshape(count, dim)
    return arr.copy()
