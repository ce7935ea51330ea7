"""Samplers for uniform ring elements, the key distribution and Gaussian errors.

Every sampler takes an explicit ``numpy.random.Generator``; none of them
touch global state.  The Gaussian sampler is not constant time.
"""

from __future__ import annotations

import numpy as np

from smhe.ring.params import Params
from smhe.ring.poly import Form, Poly, PolyVec


def sample_uniform(rng: np.random.Generator, params: Params) -> Poly:
    ctx = params.ctx
    return Poly(ctx, rng.integers(0, ctx.q, size=(ctx.L, ctx.N), dtype=np.uint64))


def sample_uniform_vec(rng: np.random.Generator, params: Params, k: int) -> PolyVec:
    ctx = params.ctx
    data = rng.integers(0, ctx.q, size=(k, ctx.L, ctx.N), dtype=np.uint64)
    return PolyVec(ctx, data, Form.COEFF)


def chi_ints(rng: np.random.Generator, params: Params, size) -> np.ndarray:
    if params.chi == "ternary":
        return rng.integers(-1, 2, size=size, dtype=np.int64)
    return rng.integers(0, 2, size=size, dtype=np.int64)


def sample_chi(rng: np.random.Generator, params: Params) -> Poly:
    """Key/masking distribution: binary {0, 1} coefficients by default."""
    return Poly.from_ints(params.ctx, chi_ints(rng, params, params.N))


def gauss_ints(rng: np.random.Generator, sigma: float, bound: int, size) -> np.ndarray:
    """Rounded continuous Gaussian, resampling anything outside [-bound, bound]."""
    if sigma == 0:
        return np.zeros(size, dtype=np.int64)
    out = np.rint(rng.normal(0.0, sigma, size=size)).astype(np.int64)
    bad = np.abs(out) > bound
    while bad.any():
        out[bad] = np.rint(rng.normal(0.0, sigma, size=int(bad.sum()))).astype(np.int64)
        bad = np.abs(out) > bound
    return out


def sample_gauss(rng: np.random.Generator, params: Params, sigma: float | None = None) -> Poly:
    s = params.sigma if sigma is None else sigma
    bound = params.gauss_bound if sigma is None else int(np.ceil(6 * s))
    return Poly.from_ints(params.ctx, gauss_ints(rng, s, bound, params.N))


def sample_gauss_vec(rng: np.random.Generator, params: Params, k: int) -> PolyVec:
    e = gauss_ints(rng, params.sigma, params.gauss_bound, (k, params.N))
    return PolyVec(params.ctx, params.ctx.from_ints(e), Form.COEFF)
