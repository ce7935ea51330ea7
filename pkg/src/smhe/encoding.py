"""Scheme-level plaintext scaling: BFV round(Q/t * mu), CKKS fixed scale."""

from __future__ import annotations

import numpy as np

from smhe.errors import PlaintextRangeError
from smhe.ring import BFV, Params, Poly


def _as_object(values, N: int) -> np.ndarray:
    v = np.asarray(values)
    if v.ndim != 1 or v.shape[0] > N:
        raise PlaintextRangeError(f"plaintext must be a vector of at most {N} coefficients")
    out = np.zeros(N, dtype=object)
    out[: v.shape[0]] = [int(x) for x in v]
    return out


def bfv_scale(mu, params: Params) -> np.ndarray:
    """Per-coefficient round(Q * mu / t) for mu in [0, t)."""
    m = _as_object(mu, params.N)
    if any(x < 0 or x >= params.t for x in m):
        raise PlaintextRangeError(f"BFV plaintext coefficients must lie in [0, {params.t})")
    Q, t = params.Q, params.t
    return (m * Q + t // 2) // t


def bfv_decode(phase: Poly, params: Params) -> np.ndarray:
    """round(t * x / Q) mod t for the [0, Q) lift of the decryption phase."""
    Q, t = params.Q, params.t
    x = params.ctx.lift(phase.to_coeff().residues)
    return ((x * t + Q // 2) // Q % t).astype(np.int64)


def ckks_encode(values, scale: int) -> np.ndarray:
    """Real coefficients -> integers round(v * scale) (Python ints, no overflow)."""
    v = np.asarray(values, dtype=np.float64)
    return np.array([int(round(float(x) * scale)) for x in v], dtype=object)


def ckks_decode(phase: Poly, scale: int) -> np.ndarray:
    x = phase.to_ints()
    return np.array([int(c) / scale for c in x], dtype=np.float64)


def scaled_plaintext(mu, params: Params) -> np.ndarray:
    """The integer message embedded in a fresh ciphertext's phase."""
    if params.scheme == BFV:
        return bfv_scale(mu, params)
    m = _as_object(mu, params.N)
    if any(2 * abs(x) >= params.Q for x in m):
        raise PlaintextRangeError("CKKS plaintext exceeds Q/2")
    return m


def decode(phase: Poly, params: Params, scale: int | None = None):
    """Scheme decode of a decryption phase: BFV -> ints mod t, CKKS -> floats."""
    if params.scheme == BFV:
        return bfv_decode(phase, params)
    return ckks_decode(phase, params.ckks_scale if scale is None else scale)


def phase_noise(phase: Poly, expected_scaled, params: Params) -> int:
    """Infinity norm of phase - expected (centered), where expected is already scaled."""
    exp = Poly.from_ints(params.ctx, _as_object(expected_scaled, params.N) % params.Q)
    return (phase.to_coeff() - exp).inf_norm()


def bfv_noise(phase: Poly, mu, params: Params) -> int:
    """Distance of a BFV phase from round(Q/t * mu) with mu reduced mod t."""
    m = np.asarray([int(x) % params.t for x in np.asarray(mu).ravel()], dtype=object)
    return phase_noise(phase, bfv_scale(m, params), params)
