"""Per-dimension int8 scalar quantization.

Each dimension gets an affine code: value = code * scale + offset with
code in [-127, 127]. Round-trip error is bounded by scale/2 per component,
i.e. (max - min) / 508 for that dimension. A constant dimension uses
scale=1, offset=value so it round-trips exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError

_LEVELS = 254  # codes span [-127, 127]


@dataclass(frozen=True, slots=True)
class QuantizationSpec:
    mode: str = "none"

    def __post_init__(self) -> None:
        if self.mode not in ("none", "int8-per-dim"):
            raise ValidationError(f"unknown quantization mode {self.mode!r}")


class QuantizedVectors:
    """int8 codes plus per-dimension scale/offset arrays."""

    def __init__(self, codes: np.ndarray, scales: np.ndarray, offsets: np.ndarray):
        if codes.dtype != np.int8:
            raise ValidationError("codes must be int8")
        if np.any(scales <= 0):
            raise ValidationError("quantization scales must be strictly positive")
        self.codes = codes
        self.scales = scales.astype(np.float32)
        self.offsets = offsets.astype(np.float32)

    @property
    def shape(self) -> tuple[int, int]:
        return self.codes.shape

    def dequantize(self) -> np.ndarray:
        return self.codes.astype(np.float32) * self.scales + self.offsets

    def dequantize_row(self, i: int) -> np.ndarray:
        return self.codes[i].astype(np.float32) * self.scales + self.offsets

    def nbytes(self) -> int:
        return self.codes.nbytes + self.scales.nbytes + self.offsets.nbytes


def quantize(vectors: np.ndarray, spec: QuantizationSpec | None = None) -> QuantizedVectors:
    """Quantize a float matrix to int8 with per-dimension affine codes."""
    if spec is not None and spec.mode != "int8-per-dim":
        raise ValidationError("quantize requires mode='int8-per-dim'")
    if vectors.ndim != 2:
        raise ValidationError("quantize expects a 2-D matrix")
    vectors = np.asarray(vectors, dtype=np.float32)
    lo = vectors.min(axis=0)
    hi = vectors.max(axis=0)
    span = hi - lo
    constant = span == 0
    scales = np.where(constant, 1.0, span / _LEVELS).astype(np.float32)
    offsets = np.where(constant, lo, (lo + hi) / 2.0).astype(np.float32)
    codes = np.rint((vectors - offsets) / scales)
    codes = np.clip(codes, -127, 127).astype(np.int8)
    return QuantizedVectors(codes, scales, offsets)
