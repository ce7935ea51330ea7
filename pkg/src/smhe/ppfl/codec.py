"""Signed fixed-point packing of real gradient vectors into plaintext polynomials."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from smhe.encoding import ckks_encode
from smhe.errors import PlaintextRangeError
from smhe.ring import BFV, Params


@dataclass(frozen=True)
class FixedPointCodec:
    """x -> round(x * 2^f) after clamping to [-clamp, clamp].

    With ``clip=False`` out-of-range inputs raise instead of saturating.
    """

    frac_bits: int = 16
    clamp: float = 8.0
    clip: bool = True

    @property
    def unit(self) -> int:
        return 1 << self.frac_bits

    def clamp_values(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise PlaintextRangeError("gradient contains non-finite values")
        if np.any(np.abs(v) > self.clamp):
            if not self.clip:
                raise PlaintextRangeError(f"value outside clamp range +-{self.clamp}")
            v = np.clip(v, -self.clamp, self.clamp)
        return v

    def encode(self, v, weight: float = 1.0) -> np.ndarray:
        """Clamp, multiply by ``weight``, then round to the 2^-f grid."""
        return np.rint(weight * self.clamp_values(v) * self.unit).astype(np.int64)

    def decode(self, k) -> np.ndarray:
        return np.asarray(k, dtype=np.float64) / self.unit


def num_chunks(d: int, params: Params) -> int:
    return max(1, -(-d // params.N))


def encode_gradient(v, codec: FixedPointCodec, params: Params, weight: float = 1.0) -> list[np.ndarray]:
    """Weighted gradient -> one plaintext per N-coefficient chunk.

    BFV chunks hold the signed codewords reduced mod t; CKKS chunks hold the
    weighted values multiplied by the ciphertext scale.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if weight <= 0:
        raise ValueError("client weights must be positive")
    N = params.N
    chunks = []
    if params.scheme == BFV:
        words = codec.encode(v, weight)
        if np.any(2 * np.abs(words.astype(object)) >= params.t):
            raise PlaintextRangeError("weighted codewords do not fit in the plaintext modulus")
        for k in range(num_chunks(v.size, params)):
            chunks.append(np.mod(words[k * N:(k + 1) * N], params.t).astype(np.int64))
        return chunks
    v = weight * codec.clamp_values(v)
    for k in range(num_chunks(v.size, params)):
        chunks.append(ckks_encode(v[k * N:(k + 1) * N], params.ckks_scale))
    return chunks


def decode_aggregate(chunks, codec: FixedPointCodec, params: Params, d: int) -> np.ndarray:
    """Inverse of the packing for decrypted sums (BFV: centered mod t, then / 2^f)."""
    parts = []
    for c in chunks:
        if params.scheme == BFV:
            c = np.asarray(c, dtype=np.int64)
            c = np.where(c > params.t // 2, c - params.t, c)
            parts.append(codec.decode(c))
        else:
            parts.append(np.asarray(c, dtype=np.float64))
    return np.concatenate(parts)[:d]
